#include "qepkit/qep_proximal.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace qepkit {

double GammaSchedule::operator()(int k) const {
    if (k < 1)
        throw Error("GammaSchedule: index starts at 1");
    double g = 0.0;
    switch (kind) {
    case Kind::Harmonic:
        g = 1.0 / (param * k);
        break;
    case Kind::ExpDecay:
        g = std::exp(-static_cast<double>(k));
        break;
    case Kind::InverseSquare:
        g = 1.0 / (static_cast<double>(k) * k);
        break;
    case Kind::LogShift:
        g = 1.0 + 1.0 / std::log(param + 1.0);
        break;
    case Kind::Custom:
        g = custom(k);
        break;
    }
    if (!(g > 0) || g > bound * (1 + 1e-12))
        throw Error("GammaSchedule: value outside (0, bound]");
    return g;
}

std::string GammaSchedule::describe() const {
    std::ostringstream os;
    switch (kind) {
    case Kind::Harmonic:
        os << "harmonic:" << param;
        break;
    case Kind::ExpDecay:
        os << "exp";
        break;
    case Kind::InverseSquare:
        os << "invsq";
        break;
    case Kind::LogShift:
        os << "logshift:" << param;
        break;
    case Kind::Custom:
        os << "custom";
        break;
    }
    return os.str();
}

GammaSchedule GammaSchedule::harmonic(double c) {
    if (!(c > 0))
        throw Error("GammaSchedule: harmonic constant must be positive");
    return {Kind::Harmonic, c, 1.0 / c, {}};
}
GammaSchedule GammaSchedule::exp_decay() { return {Kind::ExpDecay, 1.0, std::exp(-1.0), {}}; }
GammaSchedule GammaSchedule::inverse_square() { return {Kind::InverseSquare, 1.0, 1.0, {}}; }
GammaSchedule GammaSchedule::log_shift(double n) {
    if (!(n > 0))
        throw Error("GammaSchedule: logshift needs n > 0");
    return {Kind::LogShift, n, 1.0 + 1.0 / std::log(n + 1.0), {}};
}
GammaSchedule GammaSchedule::make_custom(std::function<double(int)> fn, double bound) {
    return {Kind::Custom, 0.0, bound, std::move(fn)};
}

GammaSchedule GammaSchedule::parse(const std::string& spec, int dim) {
    std::string kind = spec, arg;
    if (auto pos = spec.find(':'); pos != std::string::npos) {
        kind = spec.substr(0, pos);
        arg = spec.substr(pos + 1);
    }
    auto num = [&](double dflt) {
        if (arg.empty())
            return dflt;
        std::size_t used = 0;
        double v = std::stod(arg, &used);
        if (used != arg.size())
            throw std::invalid_argument("bad gamma parameter: " + arg);
        return v;
    };
    if (kind == "harmonic")
        return harmonic(num(1.0));
    if (kind == "exp" && arg.empty())
        return exp_decay();
    if (kind == "invsq" && arg.empty())
        return inverse_square();
    if (kind == "logshift")
        return log_shift(num(static_cast<double>(dim)));
    throw std::invalid_argument("unknown gamma schedule: " + spec);
}

Bifunction regularize(const Bifunction& f, const Vec& y_k, double gamma_k) {
    if (!(gamma_k > 0))
        throw Error("regularize: gamma_k must be positive");
    Bifunction g;
    g.eval = [f, y_k, gamma_k](const Vec& x, const Vec& y) {
        return f(x, y) + gamma_k * (x - y_k).dot(y - x);
    };
    g.subgrad2 = [f, y_k, gamma_k](const Vec& x, const Vec& y) {
        return Vec(f.grad2(x, y) + gamma_k * (x - y_k));
    };
    if (f.field) {
        g.field = [F = f.field, y_k, gamma_k](const Vec& x) { return Vec(F(x) + gamma_k * (x - y_k)); };
    }
    g.curv2 = f.curv2;
    return g;
}

SolveReport solve_proximal_qep(const QepInstance& inst, const Vec& y0, const GammaSchedule& sched,
                               double eps, double inner_delta, int max_outer,
                               const ProximalOptions& opt) {
    auto t0 = std::chrono::steady_clock::now();
    auto since = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    };
    require_dim(y0, inst.dim, "solve_proximal_qep");
    if (!(eps > 0) || !(inner_delta > 0))
        throw Error("solve_proximal_qep: eps and inner_delta must be positive");

    SolveReport rep;
    rep.status = Status::MaxIter;
    Vec y = y0;
    rep.iterates.push_back(y);
    rep.projected_iterates.push_back(project(inst.C, y));
    for (int k = 1; k <= max_outer; ++k) {
        const Vec& x = rep.projected_iterates.back();
        ConvexSet K = inst.K(x);
        Vec w0 = project(K, y);
        Bifunction fk = regularize(inst.f, y, sched(k));
        SubgradientResult inner =
            subgradient_ep_solve(fk, K, w0, inner_delta, opt.inner, opt.inner_max_iter);
        double r = (inner.w - y).norm();
        y = inner.w;
        rep.residuals.push_back(r);
        rep.inner_counts.push_back(inner.iterations);
        rep.iterates.push_back(y);
        rep.projected_iterates.push_back(project(inst.C, y));
        rep.elapsed_ms.push_back(since());
        if (!inner.converged) {
            rep.status = Status::InnerFailure;
            break;
        }
        if (r < eps) {
            rep.status = Status::Converged;
            break;
        }
    }
    rep.final_y = y;
    rep.final_x = project(inst.C, y);
    rep.info = {{"eps", eps}, {"inner_delta", inner_delta}};
    rep.wall_ms = since();
    return rep;
}

namespace {

Vec sample_in_C(const QepInstance& inst, Rng& rng) {
    auto [lo, hi] = inst.C.bounding_box();
    if (lo.allFinite() && hi.allFinite())
        return sample_point(inst.C, rng);
    return project(inst.C, sample_point(inst.ambient, rng));
}

double sstar_violation(const QepInstance& inst, const Vec& y_bar, int n_points, double tol,
                       std::uint64_t seed, int i, bool& ok) {
    Rng rng = rng_for(seed, static_cast<std::uint64_t>(i));
    Vec z = sample_in_C(inst, rng);
    ConvexSet K = inst.K(z);
    double worst = 0.0;
    ok = true;
    if (!contains(K, y_bar, tol)) {
        ok = false;
        worst = (y_bar - project(K, y_bar)).norm();
    }
    double fmin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n_points; ++j)
        fmin = std::min(fmin, inst.f(y_bar, sample_point(K, rng)));
    if (fmin < -tol) {
        ok = false;
        worst = std::max(worst, -fmin);
    }
    return worst;
}

}  // namespace

CheckResult check_sstar_membership(const QepInstance& inst, const Vec& y_bar, int n_maps,
                                   int n_points, double tol, std::uint64_t seed, Exec exec) {
    require_dim(y_bar, inst.dim, "check_sstar_membership");
    if (n_maps < 1 || n_points < 1)
        throw Error("check_sstar_membership: sample counts must be positive");
    double worst = 0.0;
    int failures = 0;
    if (exec == Exec::Parallel) {
        detail::ParallelErrors errors;
#pragma omp parallel for reduction(max : worst) reduction(+ : failures) schedule(static)
        for (int i = 0; i < n_maps; ++i) {
            errors.run([&] {
                bool ok = true;
                worst = std::max(worst, sstar_violation(inst, y_bar, n_points, tol, seed, i, ok));
                failures += ok ? 0 : 1;
            });
        }
        errors.rethrow();
    } else {
        for (int i = 0; i < n_maps; ++i) {
            bool ok = true;
            worst = std::max(worst, sstar_violation(inst, y_bar, n_points, tol, seed, i, ok));
            failures += ok ? 0 : 1;
        }
    }
    return {failures == 0, worst};
}

std::vector<double> fejer_diagnostic(const SolveReport& report, const Vec& y_star) {
    std::vector<double> out;
    out.reserve(report.iterates.size());
    for (const Vec& y : report.iterates)
        out.push_back((y - y_star).norm());
    return out;
}

}  // namespace qepkit
