#include "qepkit/harness.hpp"

#include <cmath>

namespace qepkit {

namespace {

Problem ex31() {
    Problem p;
    p.id = "ex3.1";
    QepInstance& q = p.inst;
    q.name = "ex3.1";
    q.dim = 2;
    q.C = ConvexSet::box(vec({-1, 0}), vec({1, 1}));
    q.K = ConstraintMap::moving(
        [](const Vec& x) {
            Vec c(2);
            c << x[0], 3 + x[0] * x[0];
            return c;
        },
        ConvexSet::ball(Vec::Zero(2), 1.0));
    q.f.eval = [](const Vec& x, const Vec& y) {
        return x[0] * (y[1] - x[1]) + y[0] * (y[0] - x[0]);
    };
    q.f.subgrad2 = [](const Vec& x, const Vec& y) {
        Vec g(2);
        g << 2 * y[0] - x[0], x[0];
        return g;
    };
    q.f.curv2 = 2.0;
    q.ambient = ConvexSet::box(vec({-2, 2}), vec({2, 5}));
    q.coercivity_note = "K(C) bounded; coercivity holds trivially";
    p.algorithm = "proximal";
    p.y0 = vec({0.5, 3.5});
    p.y_star = vec({0, 4});
    return p;
}

Problem ex41() {
    Problem p;
    p.id = "ex4.1";
    QepInstance& q = p.inst;
    q.name = "ex4.1";
    q.dim = 5;
    Mat M(5, 5);
    M << 5, -1, 2, 0, 2,  //
        -1, 6, -1, 3, 0,  //
        2, -1, 3, 0, 1,   //
        0, 3, 0, 5, 0,    //
        2, 0, 1, 0, 4;
    Vec pv(5);
    pv << -1, 2, 1, 0, -1;
    Mat A(11, 5);
    A.row(0).setOnes();
    A.middleRows(1, 5) = -Mat::Identity(5, 5);
    A.middleRows(6, 5) = Mat::Identity(5, 5);
    Vec b(11);
    b << 1, Vec::Zero(5), Vec::Ones(5);
    q.C = ConvexSet::polyhedron(A, b);
    q.K = ConstraintMap::moving([](const Vec& x) { return Vec(-x); },
                                ConvexSet::ball(Vec::Zero(5), 0.5), 1.0);
    q.f = Bifunction::from_field(
        [M, pv](const Vec& x) { return Vec((std::exp(-x.squaredNorm()) + 0.1) * (M * x + pv)); },
        0.1676, 8.51);
    q.ambient = ConvexSet::box(Vec::Constant(5, -1.5), Vec::Constant(5, 0.5));
    q.coercivity_note = "K(C) bounded; coercivity holds trivially";
    p.algorithm = "strong";
    p.y0 = vec({0.1, 0.2, 0.3, 0, -0.1});
    // The moving set has alpha = 1 > mu / L; the contraction run uses alpha = 0.005.
    p.strong.alpha = 0.005;
    return p;
}

Problem ex42(int n) {
    if (n <= 0)
        n = 10;
    Problem p;
    p.id = "ex4.2";
    QepInstance& q = p.inst;
    q.name = "ex4.2";
    q.dim = n;
    q.C = ConvexSet::box(Vec::Constant(n, -2), Vec::Zero(n));
    q.K.image = [](const Vec& x) {
        return ConvexSet::box(x.array() - 1, (4 * x.array() + 11) / 3);
    };
    q.f.eval = [](const Vec& x, const Vec& y) {
        return (y.squaredNorm() - x.squaredNorm()) - 2 * (y.sum() - x.sum());
    };
    q.f.subgrad2 = [](const Vec&, const Vec& y) { return Vec(2 * y.array() - 2); };
    q.f.curv2 = 2.0;
    q.ambient = ConvexSet::box(Vec::Constant(n, -3), Vec::Constant(n, 11.0 / 3));
    q.coercivity_note = "K(C) bounded; coercivity holds trivially";
    p.algorithm = "proximal";
    double start = 2;
    p.gamma = GammaSchedule::harmonic(1);
    if (n == 100) {
        start = 0.5;
        p.gamma = GammaSchedule::harmonic(2);
    } else if (n == 1000) {
        start = 1.5;
        p.gamma = GammaSchedule::exp_decay();
    } else if (n == 5000) {
        start = -1;
        p.gamma = GammaSchedule::inverse_square();
    } else if (n == 10000) {
        start = -5;
        p.gamma = GammaSchedule::log_shift(n);
    }
    p.y0 = Vec::Constant(n, start);
    p.proximal.inner = SubgradientSchedule::harmonic(10.0);
    p.y_star = Vec::Ones(n);
    return p;
}

// Symmetric root of 2 y + exp(n y - 0.5) = 2.
double ex43_root(int n) {
    double lo = -1, hi = 1;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (2 * mid + std::exp(n * mid - 0.5) - 2 > 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

Problem ex43(int n) {
    if (n <= 0)
        n = 1;
    Problem p;
    p.id = "ex4.3";
    QepInstance& q = p.inst;
    q.name = "ex4.3";
    q.dim = n;
    Mat A(n + 1, n);
    A.topRows(n) = -Mat::Identity(n, n);
    A.row(n).setConstant(-1);
    Vec b = Vec::Zero(n + 1);
    b[n] = -n;
    q.C = ConvexSet::polyhedron(A, b);
    q.K.image = [n](const Vec& x) {
        double r = x.norm();
        if (!(r > 0))
            throw InfeasibleError("ex4.3: K(x) undefined at x = 0");
        Mat Ak(n + 1, n);
        Ak.topRows(n) = -Mat::Identity(n, n);
        Ak.row(n).setOnes();
        Vec bk = Vec::Constant(n + 1, 1 / r);
        bk[n] = 1 + r / (1 + r);
        return ConvexSet::polyhedron(Ak, bk);
    };
    q.f.eval = [](const Vec& x, const Vec& y) {
        return (y.squaredNorm() - x.squaredNorm()) - std::exp(x.sum() - 0.5) +
               std::exp(y.sum() - 0.5) + 2 * (x.sum() - y.sum());
    };
    q.f.subgrad2 = [](const Vec&, const Vec& y) {
        return Vec(2 * y.array() + std::exp(y.sum() - 0.5) - 2);
    };
    double s = std::sqrt(static_cast<double>(n));
    q.ambient = ConvexSet::box(Vec::Constant(n, -1 / s), Vec::Constant(n, 2 + (n - 1) / s));
    q.coercivity_note = "K(C) bounded; coercivity holds trivially";
    p.algorithm = "proximal";
    double start = 1, c = 1;
    switch (n) {
    case 1: start = 2, c = 1; break;
    case 2: start = 0.5, c = 2; break;
    case 5: start = 1, c = 3; break;
    case 10: start = 2, c = 4; break;
    case 100: start = 0.5, c = 5; break;
    default: break;
    }
    p.y0 = Vec::Constant(n, start);
    p.gamma = GammaSchedule::harmonic(c);
    p.proximal.inner = SubgradientSchedule::harmonic(10.0);
    if (n <= 2)
        p.y_star = Vec::Constant(n, ex43_root(n));
    return p;
}

const double kEmm2Starts[3][2][6] = {
    {{10, 10, 16, 5, 49, 46}, {10, 0, 17, 5, 48, 47}},
    {{6, 5, 11, 18, 17, 42}, {6, 0, 0, 18, 0, 0}},
    {{6, 0, 0, 7, 0, 0}, {6, 1, 10, 7, 2, 5}},
};

Problem emm2(int row) {
    if (row < 1 || row > 3)
        throw Error("emm2: row must be 1, 2 or 3");
    Problem p;
    p.id = "emm2";
    EmmParams params = emm2_preset(row);
    p.inst = build_emm_2(params).qep;
    p.emm = params;
    const double* s = kEmm2Starts[row - 1][0];
    p.y0 = embed_bids({{s[0], s[1], s[2]}, {s[3], s[4], s[5]}});
    p.algorithm = "proximal";
    p.gamma = GammaSchedule::harmonic(1);
    p.proximal.inner = SubgradientSchedule::harmonic(10.0);
    Prop62 c = check_prop62(params);
    if (c.condition_i || c.condition_ii)
        p.y_star = embed_bids({{params.A[0], params.b_bounds[0][1], params.c_bounds[0][1]},
                               {params.A[1], params.b_bounds[1][1], params.c_bounds[1][1]}});
    return p;
}

Problem emm10(std::uint64_t seed) {
    Problem p;
    p.id = "emm10";
    Emm10Draw d = emm10_draw(seed);
    p.inst = build_emm_10(d.params);
    p.emm = d.params;
    p.y0 = emm10_start(d, 1.0);
    p.algorithm = "strong";
    p.strong.seed = seed;
    return p;
}

}  // namespace

const std::vector<std::string>& builtin_ids() {
    static const std::vector<std::string> ids{"ex3.1", "ex4.1", "ex4.2", "ex4.3", "emm2", "emm10"};
    return ids;
}

Problem make_builtin(const std::string& id, const BuiltinArgs& args) {
    if (id == "ex3.1")
        return ex31();
    if (id == "ex4.1")
        return ex41();
    if (id == "ex4.2")
        return ex42(args.n);
    if (id == "ex4.3")
        return ex43(args.n);
    if (id == "emm2")
        return emm2(args.row);
    if (id == "emm10")
        return emm10(args.seed);
    throw Error("unknown builtin id: " + id);
}

Vec emm2_start(int row, int option) {
    if (row < 1 || row > 3 || option < 0 || option > 1)
        throw Error("emm2_start: row in 1..3, option in 0..1");
    const double* s = kEmm2Starts[row - 1][option];
    return embed_bids({{s[0], s[1], s[2]}, {s[3], s[4], s[5]}});
}

SolveReport run_problem(const Problem& p) {
    if (p.algorithm == "strong")
        return solve_strong_qep(p.inst, p.y0, p.eps, p.strong);
    if (p.algorithm == "proximal")
        return solve_proximal_qep(p.inst, p.y0, p.gamma, p.eps, p.inner_delta.value_or(p.eps / 100),
                                  p.max_outer, p.proximal);
    throw Error("unknown algorithm: " + p.algorithm);
}

}  // namespace qepkit
