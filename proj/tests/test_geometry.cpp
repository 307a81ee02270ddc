#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qepkit/geometry.hpp"

#include <algorithm>
#include <cmath>

using namespace qepkit;

namespace {

Mat simplex_rows(int n) {
    Mat A(2 * n + 1, n);
    A.row(0).setOnes();
    A.middleRows(1, n) = -Mat::Identity(n, n);
    A.middleRows(n + 1, n) = Mat::Identity(n, n);
    return A;
}

Vec simplex_rhs(int n) {
    Vec b(2 * n + 1);
    b << 1, Vec::Zero(n), Vec::Ones(n);
    return b;
}

// Projection onto {sum z <= 1, 0 <= z <= 1} from the KKT form z = clip(p - tau, 0, 1).
Vec capped_simplex_oracle(const Vec& p) {
    auto at = [&](double tau) { return Vec((p.array() - tau).max(0.0).min(1.0)); };
    if (at(0).sum() <= 1)
        return at(0);
    double lo = 0, hi = p.maxCoeff();
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (at(mid).sum() > 1 ? lo : hi) = mid;
    }
    return at(0.5 * (lo + hi));
}

Vec random_vec(Rng& rng, int n, double lo, double hi) {
    Vec v(n);
    for (int i = 0; i < n; ++i)
        v[i] = uniform(rng, lo, hi);
    return v;
}

// A mix of every set kind, dimension 3.
std::vector<ConvexSet> set_zoo() {
    std::vector<ConvexSet> zoo;
    Rng rng = rng_for(7, 0);
    for (int i = 0; i < 4; ++i) {
        Vec a = random_vec(rng, 3, -2, 0), b = random_vec(rng, 3, 0, 2);
        zoo.push_back(ConvexSet::box(a, b));
        zoo.push_back(ConvexSet::ball(random_vec(rng, 3, -1, 1), uniform(rng, 0.2, 2)));
        Mat A(6 + 3, 3);
        A.topRows(3) = Mat::Identity(3, 3);
        A.middleRows(3, 3) = -Mat::Identity(3, 3);
        for (int r = 6; r < 9; ++r)
            A.row(r) = random_vec(rng, 3, -1, 1).transpose();
        Vec rhs(9);
        rhs << Vec::Constant(3, 2), Vec::Constant(3, 2), random_vec(rng, 3, 0.2, 1);
        zoo.push_back(ConvexSet::polyhedron(A, rhs));
        zoo.push_back(ConvexSet::translated(zoo.back(), random_vec(rng, 3, -1, 1)));
        zoo.push_back(ConvexSet::product(
            {ConvexSet::ball(Vec::Zero(1), 1), ConvexSet::box(a.head(2), b.head(2))}));
    }
    return zoo;
}

}  // namespace

TEST_CASE("box projection clamps") {
    ConvexSet C = ConvexSet::box(vec({-1, 0}), vec({1, 1}));
    Vec z = project(C, vec({0, 4}));
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 1.0);
    ConvexSet U = ConvexSet::box(Vec::Zero(2), Vec::Ones(2));
    CHECK((project(U, vec({0.3, 0.7})) - vec({0.3, 0.7})).norm() == 0.0);
}

TEST_CASE("ball projection scales radially") {
    ConvexSet B = ConvexSet::ball(Vec::Zero(2), 1);
    CHECK((project(B, vec({2, 0})) - vec({1, 0})).norm() < 1e-15);
}

TEST_CASE("capped simplex projection matches the KKT oracle") {
    ConvexSet P = ConvexSet::polyhedron(simplex_rows(5), simplex_rhs(5));
    const Vec p = Vec::Ones(5);
    const Vec want = capped_simplex_oracle(p);
    CHECK((want - Vec::Constant(5, 0.2)).norm() < 1e-12);
    CHECK((project(P, p) - want).lpNorm<Eigen::Infinity>() < 1e-8);

    Rng rng = rng_for(3, 0);
    for (int i = 0; i < 200; ++i) {
        Vec q = random_vec(rng, 5, -1, 2);
        CHECK((project(P, q) - capped_simplex_oracle(q)).lpNorm<Eigen::Infinity>() < 1e-7);
    }
}

TEST_CASE("contains") {
    CHECK(contains(ConvexSet::box(Vec::Zero(2), Vec::Ones(2)), vec({0.5, 0.5}), 1e-9));
    CHECK(contains(ConvexSet::ball(Vec::Zero(2), 1), vec({1 + 1e-12, 0}), 1e-9));
    Mat A(3, 2);
    A << -1, -1, -1, 0, 0, -1;
    ConvexSet P = ConvexSet::polyhedron(A, vec({-2, 0, 0}));
    CHECK_FALSE(contains(P, vec({0.5, 0.5}), 1e-9));
    CHECK(contains(P, vec({1, 1}), 1e-9));
}

TEST_CASE("construction errors") {
    CHECK_THROWS_AS(ConvexSet::box(vec({1}), vec({0})), InfeasibleError);
    CHECK_THROWS_AS(ConvexSet::box(vec({0, 0}), vec({1})), DimensionError);
    CHECK_THROWS_AS(ConvexSet::ball(vec({0}), -1), InfeasibleError);
    Mat A(2, 1);
    A << 1, -1;
    CHECK_THROWS_AS(ConvexSet::polyhedron(A, vec({-1, -1})), InfeasibleError);
    CHECK_THROWS_AS(project(ConvexSet::box(Vec::Zero(2), Vec::Ones(2)), Vec::Zero(3)),
                    DimensionError);
    CHECK_THROWS_AS(contains(ConvexSet::ball(Vec::Zero(2), 1), Vec::Zero(1), 1e-9),
                    DimensionError);
}

TEST_CASE("flat polyhedron is sampled on its face") {
    Mat A(4, 2);
    A << 1, 1, -1, -1, -1, 0, 0, -1;
    ConvexSet P = ConvexSet::polyhedron(A, vec({1, -1, 0, 0}));
    CHECK(P.flat());
    Rng rng = rng_for(1, 0);
    for (int i = 0; i < 100; ++i)
        CHECK(contains(P, sample_point(P, rng), 1e-8));
}

TEST_CASE("unbounded polyhedron cannot be sampled") {
    Mat A(1, 2);
    A << 1, 1;
    ConvexSet P = ConvexSet::polyhedron(A, vec({1}));
    Rng rng = rng_for(0, 0);
    CHECK_THROWS_AS(sample_point(P, rng), SamplingError);
}

TEST_CASE("box vertices") {
    auto v = box_vertices(ConvexSet::box(Vec::Zero(3), Vec::Ones(3)));
    CHECK(v.size() == 8);
    CHECK(box_vertices(ConvexSet::ball(Vec::Zero(2), 1)).empty());
    CHECK(box_vertices(ConvexSet::box(Vec::Zero(13), Vec::Ones(13))).empty());
}

TEST_CASE("property: idempotence, non-expansiveness, variational inequality") {
    const auto zoo = set_zoo();
    std::vector<std::vector<Vec>> etas(zoo.size());
    for (std::size_t s = 0; s < zoo.size(); ++s) {
        Rng rng = rng_for(11, s);
        for (int i = 0; i < 1000; ++i)
            etas[s].push_back(sample_point(zoo[s], rng));
    }
    Rng rng = rng_for(12, 0);
    double worst_idem = 0, worst_nonexp = -1e300, worst_vi = 1e300, worst_feas = 0;
    for (int c = 0; c < 10000; ++c) {
        const std::size_t s = c % zoo.size();
        const ConvexSet& S = zoo[s];
        const Vec p = random_vec(rng, 3, -4, 4), q = random_vec(rng, 3, -4, 4);
        const Vec z = project(S, p), w = project(S, q);
        worst_idem = std::max(worst_idem, (project(S, z) - z).norm());
        worst_nonexp = std::max(worst_nonexp, (z - w).norm() - (p - q).norm());
        worst_feas = std::max(worst_feas, contains(S, z, 1e-8) ? 0.0 : 1.0);
        for (const Vec& eta : etas[s])
            worst_vi = std::min(worst_vi, (z - p).dot(eta - z));
    }
    CHECK(worst_idem <= 1e-10);
    CHECK(worst_nonexp <= 1e-10);
    CHECK(worst_vi >= -1e-8);
    CHECK(worst_feas == 0.0);
}

TEST_CASE("property: translation identity and product decomposition") {
    Rng rng = rng_for(13, 0);
    for (int c = 0; c < 10000; ++c) {
        const Vec s = random_vec(rng, 2, -3, 3);
        ConvexSet base = c % 2 ? ConvexSet::ball(random_vec(rng, 2, -1, 1), 0.7)
                               : ConvexSet::box(vec({-1, -2}), vec({1, 0.5}));
        const Vec p = random_vec(rng, 2, -5, 5);
        const Vec lhs = project(ConvexSet::translated(base, s), p);
        const Vec rhs = s + project(base, p - s);
        REQUIRE((lhs - rhs).norm() == 0.0);

        ConvexSet other = ConvexSet::ball(Vec::Zero(1), 0.5);
        const Vec pp = random_vec(rng, 3, -2, 2);
        const Vec prod = project(ConvexSet::product({base, other}), pp);
        REQUIRE((prod.head(2) - project(base, pp.head(2))).norm() == 0.0);
        REQUIRE((prod.tail(1) - project(other, pp.tail(1))).norm() == 0.0);
    }
}

TEST_CASE("projection Lipschitz estimate for moving sets") {
    Rng rng = rng_for(14, 0);
    std::vector<std::pair<Vec, Vec>> pairs;
    std::vector<Vec> probes;
    for (int i = 0; i < 200; ++i) {
        pairs.emplace_back(random_vec(rng, 5, 0, 0.2), random_vec(rng, 5, 0, 0.2));
        probes.push_back(random_vec(rng, 5, -2, 2));
    }
    auto neg = ConstraintMap::moving([](const Vec& x) { return Vec(-x); },
                                     ConvexSet::ball(Vec::Zero(5), 0.5));
    CHECK(estimate_projection_lipschitz(neg, pairs, probes) <= 1 + 1e-9);
    // Far probes: every image projects onto its own translated corner, so the ratio is |nu(u) - nu(v)| / |u - v|.
    const std::vector<Vec> far{Vec::Constant(5, 50.0)};
    auto neg_box = ConstraintMap::moving([](const Vec& x) { return Vec(-x); },
                                         ConvexSet::box(Vec::Constant(5, -0.5), Vec::Constant(5, 0.5)));
    CHECK(estimate_projection_lipschitz(neg_box, pairs, far) == doctest::Approx(1).epsilon(1e-9));
    CHECK(estimate_projection_lipschitz(neg, pairs, far) == doctest::Approx(1).epsilon(1e-2));

    auto fixed = ConstraintMap::constant(ConvexSet::ball(Vec::Zero(5), 0.5));
    CHECK(estimate_projection_lipschitz(fixed, pairs, probes) == 0.0);

    auto scaled = ConstraintMap::moving([](const Vec& x) { return Vec(0.3 * x); },
                                        ConvexSet::ball(Vec::Zero(5), 1));
    CHECK(estimate_projection_lipschitz(scaled, pairs, probes) <= 0.3 + 1e-12);
    CHECK(estimate_projection_lipschitz(scaled, pairs, far) == doctest::Approx(0.3).epsilon(1e-2));

    CHECK_THROWS(estimate_projection_lipschitz(neg, {}, probes));
    CHECK_THROWS(estimate_projection_lipschitz(neg, {{Vec::Zero(5), Vec::Zero(5)}}, probes));
}
