#include "qepkit/harness.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace qepkit;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUnverified = 2, kUsage = 64 };

struct ProblemArgs {
    std::string instance;
    std::string builtin;
    BuiltinArgs b;
    std::string algorithm;
    std::string y0;
    std::string gamma;
    double eps = 0;
    bool has_seed = false;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Vec parse_csv(const std::string& s, int dim, const char* what) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        char* end = nullptr;
        const double d = std::strtod(tok.c_str(), &end);
        if (tok.empty() || *end != '\0')
            throw UsageError(std::string(what) + ": not a number: '" + tok + "'");
        v.push_back(d);
    }
    if (static_cast<int>(v.size()) != dim)
        throw UsageError(std::string(what) + ": expected " + std::to_string(dim) + " entries, got " +
                         std::to_string(v.size()));
    return Eigen::Map<Vec>(v.data(), dim);
}

void add_problem_flags(CLI::App* sub, ProblemArgs& a) {
    auto* inst = sub->add_option("--instance", a.instance, "Instance file");
    auto* bi = sub->add_option("--builtin", a.builtin, "Builtin id")
                   ->check(CLI::IsMember(builtin_ids()));
    inst->excludes(bi);
    sub->add_option("--n", a.b.n, "Dimension for ex4.2 / ex4.3");
    sub->add_option("--row", a.b.row, "Preset row for emm2")->check(CLI::Range(1, 3));
    sub->add_option("--seed", a.b.seed, "Seed")->each([&](const std::string&) { a.has_seed = true; });
    sub->add_option("--algorithm", a.algorithm, "strong | proximal")
        ->check(CLI::IsMember({"strong", "proximal"}));
    sub->add_option("--y0", a.y0, "Starting point, comma separated");
    sub->add_option("--eps", a.eps, "Outer tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--gamma", a.gamma, "harmonic[:c] | exp | invsq | logshift[:n]");
}

Problem load_problem(const ProblemArgs& a) {
    if (a.instance.empty() == a.builtin.empty())
        throw UsageError("exactly one of --instance and --builtin is required");
    Problem p;
    if (!a.instance.empty()) {
        InstanceFile f = load_instance(a.instance);
        if (a.has_seed)
            f.set("seed", {InstanceFile::Value::Type::Text, std::to_string(a.b.seed), {}, {}});
        p = instantiate(f);
    } else {
        p = make_builtin(a.builtin, a.b);
    }
    if (!a.algorithm.empty())
        p.algorithm = a.algorithm;
    if (!a.y0.empty())
        p.y0 = parse_csv(a.y0, p.inst.dim, "--y0");
    if (a.eps > 0)
        p.eps = a.eps;
    if (!a.gamma.empty()) {
        try {
            p.gamma = GammaSchedule::parse(a.gamma, p.inst.dim);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--gamma: ") + e.what());
        }
    }
    return p;
}

double default_tol(const Problem& p) { return 10 * std::max(p.eps, 1e-6); }

int cmd_solve(const ProblemArgs& a, const std::string& out, int samples, double tol,
              bool timing) {
    const Problem p = load_problem(a);
    const SolveReport rep = run_problem(p);
    if (!out.empty()) {
        std::ofstream f(out);
        if (!f)
            throw Error("cannot write " + out);
        write_run_csv(rep, f, timing);
    } else {
        write_run_csv(rep, std::cout, timing);
    }
    const CheckResult chk = check_projected_solution(p.inst, rep.final_x, rep.final_y, samples,
                                                     tol > 0 ? tol : default_tol(p), a.b.seed);
    std::cout << "final_x=" << format_vector(rep.final_x) << " status=" << to_string(rep.status)
              << " outer=" << rep.outer() << " verified=" << (chk.verdict ? "true" : "false")
              << '\n';
    if (rep.status != Status::Converged)
        return kFailure;
    return chk.verdict ? kOk : kUnverified;
}

int cmd_verify(const ProblemArgs& a, const std::string& xs, const std::string& ys, int samples,
               double tol, bool sstar) {
    const Problem p = load_problem(a);
    const Vec y = parse_csv(ys, p.inst.dim, "--y");
    const double t = tol > 0 ? tol : 1e-6;
    CheckResult chk;
    if (sstar) {
        chk = check_sstar_membership(p.inst, y, samples, samples, t, a.b.seed);
    } else {
        if (xs.empty())
            throw UsageError("--x is required unless --sstar is given");
        chk = check_projected_solution(p.inst, parse_csv(xs, p.inst.dim, "--x"), y, samples, t,
                                       a.b.seed);
    }
    std::cout << "worst_violation=" << format_number(chk.worst_violation)
              << " verdict=" << (chk.verdict ? "true" : "false") << '\n';
    return chk.verdict ? kOk : kFailure;
}

int cmd_oracle(const ProblemArgs& a, double res) {
    const Problem p = load_problem(a);
    const OracleResult r = brute_force_oracle(p.inst, res);
    std::cout << "x=" << format_vector(r.x) << " residual=" << format_number(r.residual)
              << " evaluations=" << r.evaluations << '\n';
    return kOk;
}

int cmd_emit(const ProblemArgs& a, const std::string& prefix) {
    const Problem p = load_problem(a);
    const SolveReport rep = run_problem(p);
    emit_convergence_data(rep, prefix.empty() ? p.id : prefix);
    std::cout << "wrote " << (prefix.empty() ? p.id : prefix) << "_{error,residual}.dat"
              << " outer=" << rep.outer() << '\n';
    return rep.status == Status::Converged ? kOk : kFailure;
}

int cmd_bench(int threads) {
    if (const char* env = std::getenv("QEPKIT_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0 && (threads <= 0 || threads > cap))
            threads = cap;
    }
    if (threads <= 0)
        threads = omp_get_max_threads();
    std::vector<Problem> jobs{make_builtin("ex4.1"), make_builtin("ex4.2", {10, 1, 0}),
                              make_builtin("ex4.2", {100, 1, 0}), make_builtin("ex4.3", {1, 1, 0}),
                              make_builtin("ex4.3", {2, 1, 0}), make_builtin("ex3.1")};
    std::vector<SolveReport> reps(jobs.size());
    std::vector<std::string> errors(jobs.size());
    const long m = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long i = 0; i < m; ++i) {
        try {
            reps[i] = run_problem(jobs[i]);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    int rc = kOk;
    for (long i = 0; i < m; ++i) {
        std::cout << jobs[i].id << " n=" << jobs[i].inst.dim;
        if (!errors[i].empty()) {
            std::cout << " error=" << errors[i] << '\n';
            rc = kFailure;
            continue;
        }
        std::cout << " status=" << to_string(reps[i].status) << " outer=" << reps[i].outer()
                  << " wall_ms=" << format_number(reps[i].wall_ms) << '\n';
    }
    std::cout << "threads=" << threads << '\n';
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Projected solutions of quasi-equilibrium problems"};
    app.require_subcommand(1);

    ProblemArgs pa;
    std::string out, xs, ys;
    int samples = 1000;
    double tol = 0;
    bool no_timing = false, sstar = false;
    double resolution = 1e-3;
    int threads = 0;

    auto* solve = app.add_subcommand("solve", "Solve and verify");
    add_problem_flags(solve, pa);
    solve->add_option("--out", out, "CSV output path (stdout if omitted)");
    solve->add_option("--samples", samples, "Verification samples")->check(CLI::PositiveNumber);
    solve->add_option("--tol", tol, "Verification tolerance");
    solve->add_flag("--no-timing", no_timing, "Write zero elapsed_ms for byte-stable CSV");

    auto* verify = app.add_subcommand("verify", "Check a candidate projected solution");
    add_problem_flags(verify, pa);
    verify->add_option("--x", xs, "Candidate x");
    verify->add_option("--y", ys, "Candidate y")->required();
    verify->add_option("--samples", samples, "Samples")->check(CLI::PositiveNumber);
    verify->add_option("--tol", tol, "Tolerance");
    verify->add_flag("--sstar", sstar, "Check membership of y in S* instead");

    auto* oracle = app.add_subcommand("oracle", "Brute-force grid oracle (dim <= 3)");
    add_problem_flags(oracle, pa);
    oracle->add_option("--resolution", resolution, "Grid resolution")->check(CLI::PositiveNumber);

    auto* emit = app.add_subcommand("emit", "Write convergence data files");
    add_problem_flags(emit, pa);
    emit->add_option("--out", out, "Output prefix");

    auto* bench = app.add_subcommand("bench", "Solve the shipped instances concurrently");
    bench->add_option("--threads", threads, "Worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (solve->parsed())
            return cmd_solve(pa, out, samples, tol, !no_timing);
        if (verify->parsed())
            return cmd_verify(pa, xs, ys, samples, tol, sstar);
        if (oracle->parsed())
            return cmd_oracle(pa, resolution);
        if (emit->parsed())
            return cmd_emit(pa, out);
        return cmd_bench(threads);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
}
