#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qepkit/harness.hpp"

#include <cmath>

using namespace qepkit;

namespace {

// Affine strongly monotone field on a box, with K either constant or x -> nu * x + box.
QepInstance affine_instance(double nu) {
    Mat A(3, 3);
    A << 4, 1, 0, -1, 3, 0.5, 0, -0.5, 2.5;
    const Vec c = vec({-1, 2, 0.5});
    Eigen::SelfAdjointEigenSolver<Mat> sym(0.5 * (A + A.transpose()));
    Eigen::JacobiSVD<Mat> svd(A);
    QepInstance q;
    q.name = "affine";
    q.dim = 3;
    q.C = ConvexSet::box(Vec::Constant(3, -1), Vec::Ones(3));
    const ConvexSet base = ConvexSet::box(Vec::Constant(3, -0.5), Vec::Constant(3, 0.5));
    q.K = nu == 0 ? ConstraintMap::constant(q.C)
                  : ConstraintMap::moving([nu](const Vec& x) { return Vec(nu * x); }, base, nu);
    q.f = Bifunction::from_field([A, c](const Vec& x) { return Vec(A * x + c); },
                                 sym.eigenvalues()[0], svd.singularValues()[0]);
    q.ambient = ConvexSet::box(Vec::Constant(3, -3), Vec::Constant(3, 3));
    return q;
}

// T(x): EP solution on K(x) from a long inner run.
Vec T(const QepInstance& q, const Vec& x) {
    const ConvexSet K = q.K(x);
    return nesterov_ep_solve(q.f, K, project(K, x), 4000, *q.f.mu, *q.f.lip);
}

}  // namespace

TEST_CASE("inner_budget") {
    CHECK(inner_budget(1, 1, 0.5) == 15);
    CHECK(inner_budget(0.1676, 8.51, 0.005) == 748);
    CHECK(inner_budget(1, 1, 1e-15) == 12);
    CHECK_THROWS_AS(inner_budget(1, 1, 1), ContractionError);
    CHECK_THROWS_AS(inner_budget(0.1676, 8.51, 0.02), ContractionError);
}

TEST_CASE("outer_budget") {
    CHECK(outer_budget(1, 1e-2, 0.5, 1) == 22);
    CHECK(outer_budget(1e-2 * 0.5, 1e-2, 0.5, 1) == 1);
    CHECK(outer_budget(10, 1e-4, 0.1, 2) == 30);
    CHECK_THROWS_AS(outer_budget(1, 1e-2, 0.5, 2), ContractionError);
}

TEST_CASE("total_eval_estimate") {
    CHECK(total_eval_estimate(1, 1e-2, 0.5, 1) == 782);
    CHECK(total_eval_estimate(1e-2 * 0.5, 1e-2, 0.5, 1) == 0);
    CHECK(total_eval_estimate(10, 1e-4, 0.1, 2) == 1722);
    CHECK_THROWS_AS(total_eval_estimate(1, 1e-2, 1, 1), ContractionError);
}

TEST_CASE("solve_strong_qep reaches the reference point of the strongly monotone example") {
    Problem p = make_builtin("ex4.1");
    const Vec want = vec({0.0965, 0, 0, 0.0745, 0.1092});
    SUBCASE("first start") {
        SolveReport r = solve_strong_qep(p.inst, vec({0.1, 0.2, 0.3, 0, -0.1}), 1e-4, p.strong);
        CHECK(r.status == Status::Converged);
        CHECK((r.final_x - want).lpNorm<Eigen::Infinity>() < 1e-3);
        CHECK(check_projected_solution(p.inst, r.final_x, r.final_y, 1000, 1e-3).verdict);
    }
    SUBCASE("second start") {
        SolveReport r = solve_strong_qep(p.inst, vec({-2, 0.6, -1.3, 0.5, -1}), 1e-5, p.strong);
        CHECK((r.final_x - want).lpNorm<Eigen::Infinity>() < 1e-3);
    }
}

TEST_CASE("constant map reduces to the classical EP") {
    QepInstance q = affine_instance(0);
    SolveReport r = solve_strong_qep(q, vec({1, 1, 1}), 1e-8);
    const Vec ep = nesterov_ep_solve(q.f, q.C, Vec::Zero(3), 20000, *q.f.mu, *q.f.lip);
    CHECK((r.final_x - ep).norm() < 1e-6);
}

TEST_CASE("solve_strong_qep rejects a map that breaks contraction") {
    QepInstance q = affine_instance(0.9);
    CHECK_THROWS_AS(solve_strong_qep(q, Vec::Zero(3), 1e-4), ContractionError);
    StrongOptions opt;
    opt.alpha = 1.0;
    CHECK_THROWS_AS(solve_strong_qep(affine_instance(0), Vec::Zero(3), 1e-4, opt),
                    ContractionError);
}

TEST_CASE("property: geometric residual decay and final error bound") {
    QepInstance q = affine_instance(0.05);
    const double mu = *q.f.mu, L = *q.f.lip, alpha = 0.05;
    const double delta = 1 - alpha * L / mu;
    REQUIRE(delta > 0);
    const Vec y0 = vec({3, -3, 2});
    StrongOptions tight;
    tight.k_eps = 200;
    const Vec x_star = solve_strong_qep(q, y0, 1e-12, tight).final_x;

    SolveReport r = solve_strong_qep(q, y0, 1e-9);
    std::vector<double> res;
    for (std::size_t k = 0; k < r.iterates.size(); ++k)
        res.push_back((r.iterates[k] - T(q, r.projected_iterates[k])).norm());
    for (std::size_t k = 0; k + 1 < res.size(); ++k) {
        CAPTURE(k);
        CHECK(res[k + 1] <= (1 - delta / 2) * res[k] + 1e-10);
    }
    for (std::size_t k = 0; k < r.projected_iterates.size(); ++k) {
        CAPTURE(k);
        const double bound = std::exp(-delta * k / 2) * res[0] / delta;
        CHECK((r.projected_iterates[k] - x_star).norm() <= bound + 1e-10);
    }
}

TEST_CASE("property: every x_k lies in C and every y_{k+1} in K(x_k)") {
    for (double nu : {0.0, 0.05}) {
        QepInstance q = affine_instance(nu);
        SolveReport r = solve_strong_qep(q, vec({2, 2, -2}), 1e-8);
        for (std::size_t k = 0; k + 1 < r.iterates.size(); ++k) {
            CHECK(contains(q.C, r.projected_iterates[k], 1e-12));
            CHECK(contains(q.K(r.projected_iterates[k]), r.iterates[k + 1], 1e-9));
        }
    }
}

TEST_CASE("property: uniqueness from distant starts") {
    Problem p = make_builtin("ex4.1");
    const double eps = 1e-5;
    SolveReport a = solve_strong_qep(p.inst, vec({0.1, 0.2, 0.3, 0, -0.1}), eps, p.strong);
    SolveReport b = solve_strong_qep(p.inst, vec({-2, 0.6, -1.3, 0.5, -1}), eps, p.strong);
    CHECK((a.final_x - b.final_x).norm() <= 2 * eps);

    QepInstance q = affine_instance(0.05);
    SolveReport c = solve_strong_qep(q, vec({3, 3, 3}), 1e-8);
    SolveReport d = solve_strong_qep(q, vec({-3, -3, -3}), 1e-8);
    CHECK((c.final_x - d.final_x).norm() <= 2e-8);
}

TEST_CASE("moving-set alpha is taken from nu") {
    CHECK(projection_lipschitz_for(affine_instance(0.05), 50, 0) == 0.05);
    CHECK(projection_lipschitz_for(affine_instance(0), 50, 0) == 0.0);
}

TEST_CASE("property: residual decay on the strongly monotone example") {
    Problem p = make_builtin("ex4.1");
    SolveReport r = solve_strong_qep(p.inst, vec({-2, 0.6, -1.3, 0.5, -1}), 1e-6, p.strong);
    const double mu = *p.inst.f.mu, L = *p.inst.f.lip;
    const double delta = 1 - r.info[2].second * L / mu;
    std::vector<double> res;
    for (std::size_t k = 0; k < r.iterates.size(); ++k)
        res.push_back((r.iterates[k] - T(p.inst, r.projected_iterates[k])).norm());
    for (std::size_t k = 0; k + 1 < res.size(); ++k) {
        CAPTURE(k);
        CAPTURE(res[k]);
        CHECK(res[k + 1] <= (1 - delta / 2) * res[k] + 1e-8);
    }
}
