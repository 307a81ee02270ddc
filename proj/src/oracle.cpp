#include "qepkit/harness.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qepkit {

namespace {

constexpr int kOuterStarts = 4;
constexpr double kCompassTol = 1e-9;
constexpr int kCompassMaxIter = 20000;

// Radical inverse in base b.
double halton(int i, int b) {
    double f = 1, r = 0;
    for (; i > 0; i /= b) {
        f /= b;
        r += f * (i % b);
    }
    return r;
}

// Nonzero vectors of {-1, 0, 1}^n, axis directions first.
std::vector<Vec> pattern(int n) {
    std::vector<Vec> dirs;
    for (int i = 0; i < n; ++i)
        for (double s : {1.0, -1.0}) {
            Vec d = Vec::Zero(n);
            d[i] = s;
            dirs.push_back(d);
        }
    int total = 1;
    for (int i = 0; i < n; ++i)
        total *= 3;
    for (int code = 0; code < total; ++code) {
        Vec d(n);
        int c = code, nz = 0;
        for (int i = 0; i < n; ++i, c /= 3) {
            d[i] = c % 3 - 1.0;
            nz += d[i] != 0;
        }
        if (nz >= 2)
            dirs.push_back(d / std::sqrt(static_cast<double>(nz)));
    }
    return dirs;
}

struct Searcher {
    const QepInstance& inst;
    std::vector<Vec> dirs = pattern(inst.dim);
    long evals = 0;

    // Projected pattern search minimizing phi over S from z.
    template <class Phi>
    Vec compass(const Phi& phi, const ConvexSet& S, Vec z, double step, double& best) {
        best = phi(z);
        ++evals;
        const double max_step = step;
        for (int it = 0; step > kCompassTol && it < kCompassMaxIter; ++it) {
            bool moved = false;
            for (const Vec& d : dirs) {
                Vec c = project(S, z + step * d);
                const double v = phi(c);
                ++evals;
                if (v < best) {
                    best = v;
                    z = std::move(c);
                    moved = true;
                    break;
                }
            }
            step = moved ? std::min(2 * step, max_step) : 0.5 * step;
        }
        return z;
    }

    // Regularized gap: max over z in K of -f(y, z) - |z - y|^2 / 2.
    double gap(const ConvexSet& K, const Vec& y, double span) {
        double v = 0;
        compass([&](const Vec& z) { return inst.f(y, z) + 0.5 * (z - y).squaredNorm(); }, K, y,
                span / 4, v);
        return std::max(0.0, -v);
    }

    double residual(const Vec& x) {
        const ConvexSet K = inst.K(x);
        auto [lo, hi] = K.bounding_box();
        auto [alo, ahi] = inst.ambient.bounding_box();
        lo = lo.cwiseMax(alo);
        hi = hi.cwiseMin(ahi);
        if (!lo.allFinite() || !hi.allFinite())
            throw Error("oracle: K(x) is unbounded inside the ambient box");
        const double span = std::max((hi - lo).maxCoeff(), 1e-6);
        auto g = [&](const Vec& y) { return gap(K, y, span); };
        std::vector<Vec> starts{project(K, x)};
        static const int primes[3] = {2, 3, 5};
        for (int s = 1; s <= kOuterStarts; ++s) {
            Vec u(lo.size());
            for (Eigen::Index i = 0; i < u.size(); ++i)
                u[i] = lo[i] + halton(s, primes[i]) * (hi[i] - lo[i]);
            starts.push_back(project(K, u));
        }
        // T(x): the EP solution on K(x) as the minimizer of the gap.
        double best = std::numeric_limits<double>::infinity();
        Vec t_hat;
        for (const Vec& s : starts) {
            double v = 0;
            Vec y = compass(g, K, s, span / 4, v);
            if (v < best) {
                best = v;
                t_hat = std::move(y);
            }
            if (best < 1e-14)
                break;
        }
        return best + (x - project(inst.C, t_hat)).norm();
    }
};

std::vector<Vec> lattice(const Vec& lo, const Vec& hi, double h) {
    const auto n = lo.size();
    std::vector<long> a(n), b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a[i] = static_cast<long>(std::ceil(lo[i] / h - 1e-9));
        b[i] = static_cast<long>(std::floor(hi[i] / h + 1e-9));
        if (b[i] < a[i])
            b[i] = a[i];
    }
    std::vector<Vec> pts;
    std::vector<long> idx(a);
    while (true) {
        Vec p(n);
        for (Eigen::Index i = 0; i < n; ++i)
            p[i] = idx[i] * h;
        pts.push_back(p);
        Eigen::Index i = 0;
        while (i < n && ++idx[i] > b[i]) {
            idx[i] = a[i];
            ++i;
        }
        if (i == n)
            break;
    }
    return pts;
}

std::vector<Vec> window(const Vec& center, double h, int half) {
    const Vec r = Vec::Constant(center.size(), half * h);
    std::vector<Vec> pts = lattice(center - r, center + r, h);
    return pts;
}

}  // namespace

double oracle_residual(const QepInstance& inst, const Vec& x) {
    if (inst.dim > 3)
        throw DimensionError("oracle_residual: dim > 3 rejected");
    Searcher s{inst};
    return s.residual(x);
}

OracleResult brute_force_oracle(const QepInstance& inst, double res, Exec exec) {
    if (inst.dim > 3)
        throw DimensionError("brute_force_oracle: dim > 3 rejected");
    if (!(res > 0))
        throw Error("brute_force_oracle: resolution must be positive");
    auto [lo, hi] = inst.C.bounding_box();
    auto [alo, ahi] = inst.ambient.bounding_box();
    lo = lo.cwiseMax(alo);
    hi = hi.cwiseMin(ahi);
    if (!lo.allFinite() || !hi.allFinite())
        throw Error("brute_force_oracle: C is unbounded");
    const double span = std::max((hi - lo).maxCoeff(), res);
    double h = res;
    while (h < span / 8)
        h *= 4;

    OracleResult out;
    auto evaluate = [&](const std::vector<Vec>& pts) {
        const auto m = static_cast<long>(pts.size());
        std::vector<double> r(m);
        std::vector<long> ev(m);
        auto one = [&](long i) {
            Searcher s{inst};
            r[i] = s.residual(project(inst.C, pts[i]));
            ev[i] = s.evals;
        };
        if (exec == Exec::Parallel) {
            detail::ParallelErrors errors;
#pragma omp parallel for schedule(dynamic)
            for (long i = 0; i < m; ++i)
                errors.run([&] { one(i); });
            errors.rethrow();
        } else {
            for (long i = 0; i < m; ++i)
                one(i);
        }
        out.evaluations += std::accumulate(ev.begin(), ev.end(), 0L);
        return r;
    };
    // Indices of the k smallest residuals; ties go to the lower index.
    auto best_k = [](const std::vector<double>& r, std::size_t k) {
        std::vector<std::size_t> order(r.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return r[a] < r[b]; });
        order.resize(std::min(k, order.size()));
        return order;
    };

    std::vector<Vec> pts = lattice(lo, hi, h);
    std::vector<double> r = evaluate(pts);
    while (true) {
        const bool last = h <= res * (1 + 1e-12);
        std::vector<Vec> next;
        const double nh = last ? h : h / 4;
        for (std::size_t i : best_k(r, last ? 1 : 3))
            for (Vec& p : window(pts[i], nh, last ? 3 : 2))
                if (std::none_of(next.begin(), next.end(),
                                 [&](const Vec& q) { return (q - p).norm() < 1e-3 * nh; }))
                    next.push_back(std::move(p));
        pts = std::move(next);
        r = evaluate(pts);
        h = nh;
        if (last)
            break;
    }
    const std::size_t i = best_k(r, 1).front();
    out.x = project(inst.C, pts[i]);
    out.residual = r[i];
    return out;
}

}  // namespace qepkit
