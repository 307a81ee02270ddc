#include "qepkit/emm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qepkit {

namespace {

constexpr int kA = 0, kB = 2, kC = 4;
// Payoffs are quadratic in the bids, so a wide step costs no truncation error.
constexpr double kGradStep = 1e-4;

double slot_mean(const Vec& y, int producer, int slot) {
    int o = producer * kEmmBlock + slot;
    return 0.5 * (y[o] + y[o + 1]);
}

std::vector<double> slot_means(const Vec& y, int n, int slot) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i)
        out[i] = slot_mean(y, i, slot);
    return out;
}

// {(u, u) : lo <= u <= hi}
ConvexSet diagonal_segment(double lo, double hi) {
    Mat A(4, 2);
    A << 1, -1, -1, 1, 1, 0, -1, 0;
    Vec b(4);
    b << 0, 0, hi, -lo;
    return ConvexSet::polyhedron(A, b);
}

ConvexSet point2(double v) { return ConvexSet::box(Vec::Constant(2, v), Vec::Constant(2, v)); }

// Embedded step bids over (b0, b1, c0, c1): b = (p0, p1), c = (p0, 1.5 p0 - 0.5 p1).
ConvexSet step_bid_set(const Interval& p0, const Interval& p1) {
    Mat A(8, 4);
    A << -1, 0, 1, 0,     //
        1, 0, -1, 0,      //
        -1.5, 0.5, 0, 1,  //
        1.5, -0.5, 0, -1, //
        1, 0, 0, 0,       //
        -1, 0, 0, 0,      //
        0, 1, 0, 0,       //
        0, -1, 0, 0;
    Vec b(8);
    b << 0, 0, 0, 0, p0[1], -p0[0], p1[1], -p1[0];
    return ConvexSet::polyhedron(A, b);
}

ConvexSet producer_C(const EmmParams& p, int i) {
    return ConvexSet::product({point2(0.0), step_bid_set(p.p0_bounds[i], p.p1_bounds[i])});
}

double step_objective(double u0, double u1, double v0, double v1, double p0, double p1) {
    double beta1 = 1.5 * p0 - 0.5 * p1;
    return (u0 - p0) * (u0 - p0) + (u1 - p1) * (u1 - p1) + (v0 - p0) * (v0 - p0) +
           (v1 - beta1) * (v1 - beta1);
}

}  // namespace

void EmmParams::validate() const {
    const auto n = static_cast<std::size_t>(n_producers);
    if (n_producers < 1 || A.size() != n || B.size() != n || b_bounds.size() != n ||
        p0_bounds.size() != n || p1_bounds.size() != n)
        throw Error("EmmParams: per-producer lists must have n_producers entries");
    if (k != 2)
        throw Error("EmmParams: only k = 2 step bids are supported");
    if (!(demand > 0))
        throw Error("EmmParams: demand must be positive");
    auto ok = [](const Interval& iv) { return iv[0] <= iv[1]; };
    for (std::size_t i = 0; i < n; ++i) {
        if (!(A[i] > 0))
            throw Error("EmmParams: A_i must be positive");
        if (!ok(b_bounds[i]) || !ok(p0_bounds[i]) || !ok(p1_bounds[i]))
            throw Error("EmmParams: empty bound interval");
        if (!(p0_bounds[i][1] < p1_bounds[i][0]))
            throw Error("EmmParams: price steps must be ordered");
        if (!c_bounds.empty() && !ok(c_bounds.at(i)))
            throw Error("EmmParams: empty bound interval");
    }
}

std::vector<double> iso_allocation(const std::vector<double>& A, const std::vector<double>& b,
                                   double D) {
    if (A.size() != b.size() || A.empty())
        throw DimensionError("iso_allocation: A and b sizes differ");
    double S = 0.0, Sb = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) {
        if (!(A[i] > 0))
            throw Error("iso_allocation: A_i must be positive");
        S += 1.0 / (2 * A[i]);
        Sb += b[i] / (2 * A[i]);
    }
    if (S == 0.0)
        throw Error("iso_allocation: zero denominator");
    double lambda = (D + Sb) / S;
    std::vector<double> q(A.size());
    for (std::size_t i = 0; i < A.size(); ++i)
        q[i] = (lambda - b[i]) / (2 * A[i]);
    return q;
}

Vec embed_bids(const std::vector<std::array<double, 3>>& bids) {
    Vec y(kEmmBlock * static_cast<int>(bids.size()));
    for (std::size_t i = 0; i < bids.size(); ++i)
        for (int j = 0; j < 3; ++j)
            y.segment(kEmmBlock * i + 2 * j, 2).setConstant(bids[i][j]);
    return y;
}

std::vector<std::array<double, 3>> extract_bids(const Vec& y) {
    if (y.size() % kEmmBlock != 0)
        throw DimensionError("extract_bids: length is not a multiple of 6");
    int n = static_cast<int>(y.size() / kEmmBlock);
    std::vector<std::array<double, 3>> out(n);
    for (int i = 0; i < n; ++i)
        out[i] = {slot_mean(y, i, kA), slot_mean(y, i, kB), slot_mean(y, i, kC)};
    return out;
}

Emm2 build_emm_2(const EmmParams& p) {
    p.validate();
    if (p.n_producers != 2 || p.c_bounds.size() != 2)
        throw Error("build_emm_2: needs two producers with c bounds");
    GnepInstance g;
    g.name = "emm2";
    Vec lo(12), hi(12);
    for (int i = 0; i < 2; ++i) {
        Player pl;
        pl.dim = kEmmBlock;
        pl.C = producer_C(p, i);
        double Ai = p.A[i];
        Interval bb = p.b_bounds[i], cb = p.c_bounds[i];
        int off = i * kEmmBlock;
        pl.K = [Ai, bb, cb, off](const Vec& x) {
            double c_lo = std::max(cb[0], x[off + kB]);
            return ConvexSet::product(
                {point2(Ai), diagonal_segment(bb[0], bb[1]), diagonal_segment(c_lo, cb[1])});
        };
        pl.theta = [A = p.A, B = p.B, D = p.demand, i](const Vec& y) {
            auto b = slot_means(y, 2, kB);
            auto q = iso_allocation(A, b, D);
            return (b[i] - B[i]) * q[i] + slot_mean(y, i, kC);
        };
        pl.grad_theta = fd_own_gradient(pl.theta, off, kEmmBlock, kGradStep);
        g.players.push_back(std::move(pl));
        lo.segment(off, 6) << Ai, Ai, bb[0], bb[0], cb[0], cb[0];
        hi.segment(off, 6) << Ai, Ai, bb[1], bb[1], cb[1], cb[1];
    }
    g.ambient = ConvexSet::box(lo, hi);
    QepInstance q = gnep_to_qep(g);
    q.name = "emm2";
    q.coercivity_note = "K(C) bounded; coercivity holds trivially";
    return {std::move(g), std::move(q)};
}

GnepInstance reduced_gnep_2(const EmmParams& p) {
    p.validate();
    GnepInstance g;
    g.name = "emm2-reduced";
    Vec lo(4), hi(4);
    for (int i = 0; i < 2; ++i) {
        Player pl;
        pl.dim = 2;
        Vec l(2), h(2);
        l << p.b_bounds[i][0], p.c_bounds.at(i)[0];
        h << p.b_bounds[i][1], p.c_bounds.at(i)[1];
        pl.C = ConvexSet::box(l, h);
        pl.K = [box = pl.C](const Vec&) { return box; };
        pl.theta = [A = p.A, B = p.B, D = p.demand, i](const Vec& y) {
            std::vector<double> b{y[0], y[2]};
            auto q = iso_allocation(A, b, D);
            return (b[i] - B[i]) * q[i] + y[2 * i + 1];
        };
        pl.grad_theta = fd_own_gradient(pl.theta, 2 * i, 2, kGradStep);
        lo.segment(2 * i, 2) = l;
        hi.segment(2 * i, 2) = h;
        g.players.push_back(std::move(pl));
    }
    g.ambient = ConvexSet::box(lo, hi);
    return g;
}

GnepInstance reduced_gnep_10(const EmmParams& p) {
    p.validate();
    GnepInstance g;
    g.name = "emm10-reduced";
    const int n = p.n_producers;
    Vec lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
        Player pl;
        pl.dim = 1;
        pl.C = ConvexSet::box(Vec::Constant(1, p.b_bounds[i][0]), Vec::Constant(1, p.b_bounds[i][1]));
        pl.K = [box = pl.C](const Vec&) { return box; };
        pl.theta = [A = p.A, B = p.B, D = p.demand, i](const Vec& b) {
            std::vector<double> bv(b.data(), b.data() + b.size());
            return (bv[i] - B[i]) * iso_allocation(A, bv, D)[i];
        };
        pl.grad_theta = fd_own_gradient(pl.theta, i, 1, kGradStep);
        lo[i] = p.b_bounds[i][0];
        hi[i] = p.b_bounds[i][1];
        g.players.push_back(std::move(pl));
    }
    g.ambient = ConvexSet::box(lo, hi);
    return g;
}

QepInstance build_emm_10(const EmmParams& p) {
    p.validate();
    const int n = p.n_producers;
    const int dim = kEmmBlock * n;
    GnepInstance red = reduced_gnep_10(p);

    std::vector<ConvexSet> cs, ms;
    Vec lo(dim), hi(dim);
    for (int i = 0; i < n; ++i) {
        cs.push_back(producer_C(p, i));
        const auto& bb = p.b_bounds[i];
        ms.push_back(ConvexSet::product({point2(p.A[i]), diagonal_segment(bb[0], bb[1]), point2(0.0)}));
        double c_lo = p.alpha * p.p0_bounds[i][0], c_hi = p.alpha * p.p0_bounds[i][1];
        lo.segment(kEmmBlock * i, 6) << p.A[i], p.A[i], bb[0], bb[0], c_lo, c_lo;
        hi.segment(kEmmBlock * i, 6) << p.A[i], p.A[i], bb[1], bb[1], c_hi, c_hi;
    }

    QepInstance q;
    q.name = "emm10";
    q.dim = dim;
    q.C = ConvexSet::product(std::move(cs));
    const double alpha = p.alpha;
    auto nu = [n, dim, alpha](const Vec& x) {
        Vec v = Vec::Zero(dim);
        for (int i = 0; i < n; ++i)
            v.segment(kEmmBlock * i + kC, 2).setConstant(alpha * x[kEmmBlock * i + kB]);
        return v;
    };
    q.K = ConstraintMap::moving(nu, ConvexSet::product(std::move(ms)), alpha * std::sqrt(2.0));

    // Each b slot carries half of the reduced gradient.
    auto field = [red, n, dim](const Vec& y) {
        Vec b(n);
        for (int i = 0; i < n; ++i)
            b[i] = slot_mean(y, i, kB);
        Vec Gr = red.G(b);
        Vec out = Vec::Zero(dim);
        for (int i = 0; i < n; ++i)
            out.segment(kEmmBlock * i + kB, 2).setConstant(0.5 * Gr[i]);
        return out;
    };
    Vec mid(n);
    for (int i = 0; i < n; ++i)
        mid[i] = 0.5 * (p.b_bounds[i][0] + p.b_bounds[i][1]);
    double mu = estimate_mu(red, {mid});
    double L = estimate_L(red, {mid});
    q.f = Bifunction::from_field(field, 0.5 * mu, 0.5 * L);
    q.ambient = ConvexSet::box(lo, hi);
    q.coercivity_note = "K(C) bounded; coercivity holds trivially";
    return q;
}

std::vector<StepBid> project_bid_to_C(const EmmParams& p, const Vec& y) {
    p.validate();
    require_dim(y, kEmmBlock * p.n_producers, "project_bid_to_C");
    std::vector<StepBid> out(p.n_producers);
    for (int i = 0; i < p.n_producers; ++i) {
        int o = kEmmBlock * i;
        double u0 = y[o + kB], u1 = y[o + kB + 1], v0 = y[o + kC], v1 = y[o + kC + 1];
        const Interval& r0 = p.p0_bounds[i];
        const Interval& r1 = p.p1_bounds[i];
        auto clamp0 = [&](double v) { return std::clamp(v, r0[0], r0[1]); };
        auto clamp1 = [&](double v) { return std::clamp(v, r1[0], r1[1]); };
        // Normal equations: [8.5 -1.5; -1.5 2.5] p = (2u0 + 2v0 + 3v1, 2u1 - v1).
        double g0 = 2 * u0 + 2 * v0 + 3 * v1, g1 = 2 * u1 - v1;
        double det = 8.5 * 2.5 - 1.5 * 1.5;
        std::vector<std::array<double, 2>> cand;
        double q0 = (2.5 * g0 + 1.5 * g1) / det, q1 = (1.5 * g0 + 8.5 * g1) / det;
        if (q0 >= r0[0] && q0 <= r0[1] && q1 >= r1[0] && q1 <= r1[1])
            cand.push_back({q0, q1});
        for (double e0 : r0)
            cand.push_back({e0, clamp1((g1 + 1.5 * e0) / 2.5)});
        for (double e1 : r1)
            cand.push_back({clamp0((g0 + 1.5 * e1) / 8.5), e1});
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : cand) {
            double v = step_objective(u0, u1, v0, v1, c[0], c[1]);
            if (v < best) {
                best = v;
                out[i].p0 = c[0];
                out[i].p1 = c[1];
            }
        }
        out[i].beta0 = out[i].p0;
        out[i].beta1 = out[i].p0 + (out[i].p0 - out[i].p1) * 0.5;
    }
    return out;
}

Vec embed_step_bids(const std::vector<StepBid>& bids) {
    Vec y = Vec::Zero(kEmmBlock * static_cast<int>(bids.size()));
    for (std::size_t i = 0; i < bids.size(); ++i) {
        auto o = static_cast<Eigen::Index>(kEmmBlock * i);
        y[o + kB] = bids[i].p0;
        y[o + kB + 1] = bids[i].p1;
        y[o + kC] = bids[i].beta0;
        y[o + kC + 1] = bids[i].beta1;
    }
    return y;
}

Prop62 check_prop62(const EmmParams& p) {
    if (p.n_producers != 2)
        throw Error("check_prop62: needs two producers");
    double A1 = p.A[0], A2 = p.A[1], B1 = p.B[0], B2 = p.B[1];
    double b1 = p.b_bounds[0][1], b2 = p.b_bounds[1][1];
    Prop62 r;
    r.condition_i = 2 * b1 <= b2 && 2 * A1 + B2 + b1 - 2 * b2 >= 0;
    r.condition_ii = b1 >= 2 * b2 && 2 * A2 + B1 - 2 * b1 + b2 >= 0;
    return r;
}

bool allocation_nonpositive(const EmmParams& p, const Vec& y) {
    auto q = iso_allocation(p.A, slot_means(y, p.n_producers, kB), p.demand);
    return std::any_of(q.begin(), q.end(), [](double v) { return v <= 0.0; });
}

EmmParams emm2_preset(int row) {
    EmmParams p;
    p.n_producers = 2;
    p.p0_bounds = {{15, 50}, {20, 60}};
    p.p1_bounds = {{51, 200}, {61, 100}};
    switch (row) {
    case 1:
        p.A = {10, 5};
        p.B = {2, 10};
        p.b_bounds = {{0, 10}, {0, 20}};
        p.c_bounds = {{15, 50}, {20, 60}};
        break;
    case 2:
        p.A = {6, 18};
        p.B = {12, 5};
        p.b_bounds = {{0, 31}, {0, 15}};
        p.c_bounds = {{15, 100}, {20, 100}};
        break;
    case 3:
        p.A = {6, 7};
        p.B = {100, 20};
        p.b_bounds = {{0, 31}, {0, 50}};
        p.c_bounds = {{15, 100}, {20, 100}};
        break;
    default:
        throw Error("emm2_preset: row must be 1, 2 or 3");
    }
    return p;
}

Emm10Draw emm10_draw(std::uint64_t seed) {
    Emm10Draw d;
    EmmParams& p = d.params;
    p.n_producers = 10;
    p.b_bounds = {{-1, 1}, {0, 2},    {1, 3},    {-2, -1}, {-1, 0},
                  {2, 3},  {1, 2},    {0.5, 1},  {-0.5, 0}, {0, 50}};
    p.p1_bounds = {{15, 40}, {20, 60}, {17, 48}, {21, 51}, {80, 100},
                   {30, 60}, {25, 53}, {19, 32}, {25, 60}, {60, 90}};
    p.p0_bounds.assign(10, {5, 10});
    Rng rng = rng_for(seed, 0);
    for (int i = 0; i < 10; ++i) {
        p.A.push_back(uniform(rng, 5, 10));
        p.B.push_back(uniform(rng, -5, 5));
        d.p0.push_back(uniform(rng, 5, 10));
    }
    return d;
}

Vec emm10_start(const Emm10Draw& d, double scale) {
    std::vector<std::array<double, 3>> bids;
    for (int i = 0; i < d.params.n_producers; ++i)
        bids.push_back({d.params.A[i], scale, d.params.alpha * d.p0[i]});
    return embed_bids(bids);
}

}  // namespace qepkit
