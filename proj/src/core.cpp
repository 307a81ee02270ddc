#include "qepkit/core.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qepkit {

Vec Bifunction::grad2(const Vec& x, const Vec& y) const {
    if (subgrad2)
        return subgrad2(x, y);
    return fd_grad2(*this, x, y);
}

Bifunction Bifunction::from_field(std::function<Vec(const Vec&)> F, std::optional<double> mu,
                                  std::optional<double> lip) {
    Bifunction f;
    f.field = F;
    f.eval = [F](const Vec& x, const Vec& y) { return F(x).dot(y - x); };
    f.subgrad2 = [F](const Vec& x, const Vec&) { return F(x); };
    f.mu = mu;
    f.lip = lip;
    f.curv2 = 0.0;
    return f;
}

Vec fd_grad2(const Bifunction& f, const Vec& x, const Vec& y, double h) {
    Vec g(y.size());
    Vec yp = y, ym = y;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        yp[i] = y[i] + h;
        ym[i] = y[i] - h;
        g[i] = (f(x, yp) - f(x, ym)) / (2 * h);
        yp[i] = ym[i] = y[i];
    }
    return g;
}

const char* to_string(Status s) {
    switch (s) {
    case Status::Converged:
        return "Converged";
    case Status::MaxIter:
        return "MaxIter";
    case Status::InnerFailure:
        return "InnerFailure";
    }
    return "?";
}

CheckResult check_projected_solution(const QepInstance& inst, const Vec& x_bar, const Vec& y_bar,
                                     int n_samples, double tol, std::uint64_t seed, Exec exec) {
    require_dim(x_bar, inst.dim, "check_projected_solution");
    require_dim(y_bar, inst.dim, "check_projected_solution");
    if (n_samples < 1)
        throw Error("check_projected_solution: n_samples must be positive");

    double worst = 0.0;
    bool ok = true;
    if (!contains(inst.C, x_bar, tol)) {
        ok = false;
        worst = std::max(worst, (x_bar - project(inst.C, x_bar)).norm());
    }
    double d_proj = (x_bar - project(inst.C, y_bar)).norm();
    if (d_proj > tol) {
        ok = false;
        worst = std::max(worst, d_proj);
    }
    ConvexSet K = inst.K(x_bar);
    if (!contains(K, y_bar, tol)) {
        ok = false;
        worst = std::max(worst, (y_bar - project(K, y_bar)).norm());
    }

    double fmin = std::numeric_limits<double>::infinity();
    for (const Vec& v : box_vertices(K))
        fmin = std::min(fmin, inst.f(y_bar, v));
    if (exec == Exec::Parallel) {
        detail::ParallelErrors errors;
#pragma omp parallel for reduction(min : fmin) schedule(static)
        for (int i = 0; i < n_samples; ++i) {
            errors.run([&] {
                Rng rng = rng_for(seed, static_cast<std::uint64_t>(i));
                fmin = std::min(fmin, inst.f(y_bar, sample_point(K, rng)));
            });
        }
        errors.rethrow();
    } else {
        for (int i = 0; i < n_samples; ++i) {
            Rng rng = rng_for(seed, static_cast<std::uint64_t>(i));
            fmin = std::min(fmin, inst.f(y_bar, sample_point(K, rng)));
        }
    }
    if (fmin < -tol) {
        ok = false;
        worst = std::max(worst, -fmin);
    }
    return {ok, worst};
}

namespace {

struct AssumptionSample {
    double a1 = 0.0;       // |f(x,x)|
    double sym = 0.0;      // f(x,y) + f(y,x)
    double mu_ratio = 0.0; // -(f(x,y)+f(y,x)) / |x-y|^2
    double L_ratio = 0.0;
};

AssumptionSample assumption_sample(const QepInstance& inst, std::uint64_t seed, int i) {
    Rng rng = rng_for(seed, static_cast<std::uint64_t>(i));
    Vec x = sample_point(inst.ambient, rng);
    Vec y = sample_point(inst.ambient, rng);
    Vec z = sample_point(inst.ambient, rng);
    AssumptionSample s;
    s.a1 = std::abs(inst.f(x, x));
    double fxy = inst.f(x, y), fyx = inst.f(y, x);
    s.sym = fxy + fyx;
    double d2 = (x - y).squaredNorm();
    s.mu_ratio = d2 > 0 ? -s.sym / d2 : std::numeric_limits<double>::infinity();
    double den = (y - x).norm() * (z - y).norm();
    s.L_ratio = den > 0 ? (inst.f(x, z) - fxy - inst.f(y, z)) / den : 0.0;
    return s;
}

}  // namespace

AssumptionReport check_assumptions(const QepInstance& inst, int n_samples, std::uint64_t seed,
                                   Exec exec) {
    double a1 = 0.0, sym = -std::numeric_limits<double>::infinity();
    double mu = std::numeric_limits<double>::infinity(), L = 0.0;
    if (exec == Exec::Parallel) {
        detail::ParallelErrors errors;
#pragma omp parallel for reduction(max : a1, sym, L) reduction(min : mu) schedule(static)
        for (int i = 0; i < n_samples; ++i) {
            errors.run([&] {
                AssumptionSample s = assumption_sample(inst, seed, i);
                a1 = std::max(a1, s.a1);
                sym = std::max(sym, s.sym);
                mu = std::min(mu, s.mu_ratio);
                L = std::max(L, s.L_ratio);
            });
        }
        errors.rethrow();
    } else {
        for (int i = 0; i < n_samples; ++i) {
            AssumptionSample s = assumption_sample(inst, seed, i);
            a1 = std::max(a1, s.a1);
            sym = std::max(sym, s.sym);
            mu = std::min(mu, s.mu_ratio);
            L = std::max(L, s.L_ratio);
        }
    }
    AssumptionReport r;
    r.A1_ok = a1 <= 1e-10;
    r.monotone_ok = sym <= 1e-8;
    r.strong_mu_est = std::max(0.0, mu);
    r.lipschitz_L_est = L;
    return r;
}

double subgrad2_fd_check(const Bifunction& f, const Vec& x, const Vec& y) {
    if (!f.has_subgrad2())
        throw Error("subgrad2_fd_check: bifunction has no analytic subgradient");
    return (f.subgrad2(x, y) - fd_grad2(f, x, y)).lpNorm<Eigen::Infinity>();
}

}  // namespace qepkit
