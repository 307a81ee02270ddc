#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qepkit/harness.hpp"

#include <cmath>

using namespace qepkit;

namespace {

ConvexSet interval(double a, double b) { return ConvexSet::box(vec({a}), vec({b})); }

Bifunction identity_field() {
    return Bifunction::from_field([](const Vec& x) { return x; }, 1.0, 1.0);
}

// f(x, y) = <A x + c, y - x> with A positive definite.
struct AffineEp {
    Mat A;
    Vec c;
    double mu, L;
    Bifunction f;
};

AffineEp affine_ep() {
    AffineEp e;
    e.A.resize(3, 3);
    e.A << 3, 1, 0, -1, 2, 0.5, 0, -0.5, 1.5;
    e.c = vec({-2, 1, 0.5});
    Eigen::SelfAdjointEigenSolver<Mat> sym(0.5 * (e.A + e.A.transpose()));
    e.mu = sym.eigenvalues()[0];
    Eigen::JacobiSVD<Mat> svd(e.A);
    e.L = svd.singularValues()[0];
    Mat A = e.A;
    Vec c = e.c;
    e.f = Bifunction::from_field([A, c](const Vec& x) { return Vec(A * x + c); }, e.mu, e.L);
    return e;
}

// Projected fixed-point iteration y <- P_D(y - t F(y)), run to machine precision.
Vec affine_solution(const AffineEp& e, const ConvexSet& D) {
    const double t = e.mu / (e.L * e.L);
    Vec y = project(D, Vec::Zero(3));
    for (int i = 0; i < 200000; ++i) {
        Vec next = project(D, y - t * (e.A * y + e.c));
        if ((next - y).norm() < 1e-15)
            return next;
        y = next;
    }
    return y;
}

}  // namespace

TEST_CASE("solve_subproblem closed forms") {
    SUBCASE("linear f, large box: a - c / q") {
        const Vec c = vec({1, -2});
        Bifunction f = Bifunction::from_field([c](const Vec&) { return c; });
        const Vec a = vec({0.5, 0.25});
        const Vec z = solve_subproblem(f, {{a, 1.0}}, 4.0, ConvexSet::box(Vec::Constant(2, -1e6),
                                                                           Vec::Constant(2, 1e6)));
        CHECK((z - (a - c / 4)).norm() < 1e-12);
    }
    SUBCASE("f = <x, y - x>, anchor 1, q = 1, D = [-1, 1]") {
        // min z + (z - 1)^2 / 2 on [-1, 1]: stationary at z = 0.
        const Vec z = solve_subproblem(identity_field(), {{vec({1}), 1.0}}, 1.0, interval(-1, 1));
        CHECK(std::abs(z[0]) < 1e-12);
    }
    SUBCASE("f = 0, anchors 0 and 2: their mean") {
        Bifunction zero;
        zero.eval = [](const Vec&, const Vec&) { return 0.0; };
        const Vec z =
            solve_subproblem(zero, {{vec({0}), 1.0}, {vec({2}), 1.0}}, 1.0, interval(-1, 1));
        CHECK(z[0] == doctest::Approx(1).epsilon(1e-9));
    }
}

TEST_CASE("solve_subproblem, nonlinear f, against a dense grid") {
    // f(x, y) = exp(y) - exp(x) - 2 (y - x), no analytic subgradient.
    Bifunction f;
    f.eval = [](const Vec& x, const Vec& y) {
        return std::exp(y[0]) - std::exp(x[0]) - 2 * (y[0] - x[0]);
    };
    const std::vector<Anchor> anchors{{vec({-0.5}), 2.0}, {vec({1.5}), 1.0}};
    const Vec z = solve_subproblem(f, anchors, 0.7, interval(-1, 1));
    double best = 1e300, arg = 0;
    for (int i = 0; i <= 2000000; ++i) {
        const double u = -1 + 2.0 * i / 2000000;
        double v = 0;
        for (const auto& a : anchors)
            v += a.weight * (f(a.point, vec({u})) + 0.35 * (u - a.point[0]) * (u - a.point[0]));
        if (v < best) {
            best = v;
            arg = u;
        }
    }
    CHECK(std::abs(z[0] - arg) < 2e-6);
}

TEST_CASE("solve_subproblem rejects bad input") {
    CHECK_THROWS(solve_subproblem(identity_field(), {}, 1.0, interval(-1, 1)));
    CHECK_THROWS(solve_subproblem(identity_field(), {{vec({0}), 1.0}}, 0.0, interval(-1, 1)));
    CHECK_THROWS(solve_subproblem(identity_field(), {{vec({0}), -1.0}}, 1.0, interval(-1, 1)));
}

TEST_CASE("nesterov_ep_solve on the scalar identity field") {
    // EP solution 0; bound 5 exp(-15/4) * |1 - 0|.
    const Vec y = nesterov_ep_solve(identity_field(), interval(-1, 1), vec({1}), 15, 1, 1);
    CHECK(std::abs(y[0]) <= 5 * std::exp(-15.0 / 4));
}

TEST_CASE("nesterov_ep_solve fixed point") {
    Bifunction f;
    f.eval = [](const Vec& x, const Vec& y) { return y.squaredNorm() - x.squaredNorm(); };
    f.subgrad2 = [](const Vec&, const Vec& y) { return Vec(2 * y); };
    f.curv2 = 2.0;
    NesterovState st;
    const Vec y = nesterov_ep_solve(f, ConvexSet::box(Vec::Constant(2, -1), Vec::Ones(2)),
                                    Vec::Zero(2), 10, 1, 2, &st);
    CHECK(y.norm() < 1e-12);
    for (const Vec& w : st.w_points)
        CHECK(w.norm() < 1e-12);
}

TEST_CASE("nesterov_ep_solve on ex4.1 restricted to K(x)") {
    Problem p = make_builtin("ex4.1");
    const Vec x_bar = vec({0.0965, 0, 0, 0.0745, 0.1092});
    const Vec y_bar = vec({0.096552, -0.268553, -0.265827, 0.074467, 0.109249});
    const ConvexSet D = p.inst.K(x_bar);
    const double mu = *p.inst.f.mu, L = *p.inst.f.lip;
    const Vec y = nesterov_ep_solve(p.inst.f, D, project(D, x_bar), 748, mu, L);
    CHECK((y - y_bar).lpNorm<Eigen::Infinity>() < 1e-2);
}

TEST_CASE("property: weight recursion") {
    AffineEp e = affine_ep();
    const ConvexSet D = ConvexSet::box(Vec::Constant(3, -1), Vec::Ones(3));
    NesterovState st;
    nesterov_ep_solve(e.f, D, vec({1, 1, -1}), 40, e.mu, e.L, &st);
    REQUIRE(st.lambda.size() == 41);
    CHECK(st.lambda[0] == 1.0);
    double S = st.lambda[0], sum = 0;
    for (std::size_t n = 1; n < st.lambda.size(); ++n) {
        CHECK(st.lambda[n] > 0);
        CHECK(st.lambda[n] == doctest::Approx(e.mu / e.L * S).epsilon(1e-14));
        S += st.lambda[n];
    }
    CHECK(S == doctest::Approx(st.S).epsilon(1e-14));
    for (double l : st.lambda)
        sum += l / st.S;
    CHECK(std::abs(sum - 1) < 1e-12);
    for (const Vec& w : st.w_points)
        CHECK(contains(D, w, 1e-12));
}

TEST_CASE("nesterov weights are rescaled without changing the output") {
    // mu / L = 1 doubles S every step: 800 steps overflow without rescaling.
    const Vec y = nesterov_ep_solve(identity_field(), interval(-1, 1), vec({1}), 800, 1, 1);
    CHECK(std::isfinite(y[0]));
    CHECK(std::abs(y[0]) < 1e-12);
}

TEST_CASE("property: error bound and first-step sandwich on an affine strongly monotone EP") {
    AffineEp e = affine_ep();
    const ConvexSet D = ConvexSet::box(vec({-0.2, -1, -1}), vec({0.4, 1, 0.1}));
    const Vec star = affine_solution(e, D);
    Rng rng = rng_for(51, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec y_hat = sample_point(D, rng);
        const double d0 = (y_hat - star).norm();
        for (int N : {1, 2, 5, 10, 20, 50}) {
            NesterovState st;
            const Vec y = nesterov_ep_solve(e.f, D, y_hat, N, e.mu, e.L, &st);
            const double bound =
                5 * e.L / e.mu * std::exp(-N * e.mu / (2 * (e.L + e.mu))) * d0;
            CHECK((y - star).norm() <= bound + 1e-12);
            const double first = (y_hat - st.w_points[0]).norm();
            CHECK(e.mu / (2 * e.L) * d0 <= first + 1e-12);
            CHECK(first <= 2 * d0 + 1e-12);
        }
    }
}

TEST_CASE("subgradient_ep_solve on the scalar identity field") {
    // Bisection on the fixed-point condition w = P_D(w - w) locates the root 0.
    double lo = -1, hi = 1;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mid > 0 ? hi : lo) = mid;
    }
    const double root = 0.5 * (lo + hi);
    SubgradientResult r = subgradient_ep_solve(identity_field(), interval(-1, 1), vec({1}), 1e-6,
                                               SubgradientSchedule::harmonic(), 1000000);
    CHECK(r.converged);
    CHECK(std::abs(r.w[0] - root) < 1e-3);
}

TEST_CASE("subgradient_ep_solve stops at once on a zero subgradient") {
    Bifunction f;
    f.eval = [](const Vec& x, const Vec& y) {
        return (y.array() - 1).square().sum() - (x.array() - 1).square().sum();
    };
    f.subgrad2 = [](const Vec&, const Vec& y) { return Vec(2 * (y.array() - 1)); };
    SubgradientResult r = subgradient_ep_solve(f, interval(-2, 2), vec({1}), 1e-9,
                                               SubgradientSchedule::harmonic(), 10);
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    CHECK(r.w[0] == 1.0);
}

TEST_CASE("subgradient_ep_solve reports max_iter") {
    SubgradientResult r = subgradient_ep_solve(identity_field(), interval(-1, 1), vec({1}), 1e-12,
                                               SubgradientSchedule::harmonic(0.01), 5);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 5);
}

TEST_CASE("property: subgradient iterates stay in D") {
    Problem p = make_builtin("ex4.3", {2, 1, 0});
    const ConvexSet D = p.inst.K(vec({1, 1}));
    Rng rng = rng_for(61, 0);
    for (int t = 0; t < 200; ++t) {
        const Vec w0 = sample_point(D, rng);
        for (int j : {1, 3, 10, 50}) {
            SubgradientResult r =
                subgradient_ep_solve(p.inst.f, D, w0, 1e-14, SubgradientSchedule::harmonic(), j);
            CHECK(contains(D, r.w, 1e-9));
        }
    }
}

TEST_CASE("regularized first proximal step on ex4.2 matches a tight inner solve") {
    Problem p = make_builtin("ex4.2", {10, 1, 0});
    const Vec y0 = Vec::Constant(10, 2);
    const Vec x0 = project(p.inst.C, y0);
    const ConvexSet D = p.inst.K(x0);
    // Stationarity of f_1(w, .) at w: 2w - 2 + (w - 2) = 0.
    const Vec closed = Vec::Constant(10, 4.0 / 3);
    const Bifunction f1 = regularize(p.inst.f, y0, 1.0);
    SubgradientResult tight = subgradient_ep_solve(f1, D, project(D, y0), 1e-10,
                                                   SubgradientSchedule::harmonic(10.0), 50000000);
    CHECK(tight.converged);
    CHECK((tight.w - closed).lpNorm<Eigen::Infinity>() < 1e-6);

    SolveReport rep = solve_proximal_qep(p.inst, y0, GammaSchedule::harmonic(1), 1e-4, 1e-6, 1,
                                         p.proximal);
    REQUIRE(rep.iterates.size() >= 2);
    CHECK((rep.iterates[1] - tight.w).lpNorm<Eigen::Infinity>() < 1e-4);
}

TEST_CASE("dual_gap") {
    const Bifunction f = identity_field();
    const ConvexSet D = interval(-1, 1);
    // g(0) = sup -x^2 / 2 = 0.
    CHECK(std::abs(dual_gap(f, D, 1, vec({0}))) < 1e-12);
    // g(1) = sup 1/2 - x^2 / 2, checked on a dense grid.
    double grid = -1e300;
    for (int i = 0; i <= 200000; ++i) {
        const double x = -1 + 2.0 * i / 200000;
        grid = std::max(grid, f(vec({x}), vec({1})) + 0.5 * (x - 1) * (x - 1));
    }
    CHECK(dual_gap(f, D, 1, vec({1})) == doctest::Approx(grid).epsilon(1e-8));
}

TEST_CASE("property: dual_gap is nonnegative and execution-independent") {
    Problem p = make_builtin("ex4.1");
    const ConvexSet D = p.inst.K(vec({0.1, 0, 0, 0.1, 0.1}));
    for (int i = 0; i < 50; ++i) {
        Rng rng = rng_for(71, i);
        const Vec y = sample_point(D, rng);
        const double a = dual_gap(p.inst.f, D, *p.inst.f.mu, y, 8, i, Exec::Serial);
        const double b = dual_gap(p.inst.f, D, *p.inst.f.mu, y, 8, i, Exec::Parallel);
        CHECK(a >= -1e-8);
        CHECK(a == b);
    }
}
