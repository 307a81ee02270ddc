#include "qepkit/ep_inner.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qepkit {

SubgradientSchedule SubgradientSchedule::harmonic(double beta0, double rho) {
    return {[beta0](int j) { return beta0 / (j + 1); }, [rho](int) { return rho; }};
}

Vec solve_subproblem(const Bifunction& f, const std::vector<Anchor>& anchors, double quad_coeff,
                     const ConvexSet& D, double tol, int max_iter) {
    if (anchors.empty())
        throw Error("solve_subproblem: no anchors");
    if (!(quad_coeff > 0))
        throw Error("solve_subproblem: quad_coeff must be positive");
    double W = 0.0;
    for (const auto& a : anchors) {
        if (!(a.weight > 0))
            throw Error("solve_subproblem: weights must be positive");
        W += a.weight;
    }
    const Eigen::Index n = D.dim();
    Vec mean = Vec::Zero(n);
    for (const auto& a : anchors)
        mean += (a.weight / W) * a.point;

    if (f.linear_in_y()) {
        Vec Fbar = Vec::Zero(n);
        for (const auto& a : anchors)
            Fbar += (a.weight / W) * f.field(a.point);
        Vec z = project(D, mean - Fbar / quad_coeff);
        if (!z.allFinite())
            throw ConvergenceError("solve_subproblem: non-finite iterate");
        return z;
    }

    // Objective and gradient scaled by 1/W.
    auto phi = [&](const Vec& z) {
        double v = 0.0;
        for (const auto& a : anchors)
            v += (a.weight / W) * (f(a.point, z) + 0.5 * quad_coeff * (z - a.point).squaredNorm());
        return v;
    };
    auto grad = [&](const Vec& z) {
        Vec g = quad_coeff * (z - mean);
        for (const auto& a : anchors)
            g += (a.weight / W) * f.grad2(a.point, z);
        return g;
    };

    const bool fixed = f.curv2.has_value();
    double t = fixed ? 1.0 / (quad_coeff + *f.curv2) : 1.0 / quad_coeff;
    Vec z = project(D, mean);
    for (int it = 0; it < max_iter; ++it) {
        Vec g = grad(z);
        Vec z_new = project(D, z - t * g);
        if (!fixed) {
            double pz = phi(z);
            while (true) {
                Vec d = z_new - z;
                if (phi(z_new) <= pz + g.dot(d) + d.squaredNorm() / (2 * t) + 1e-15 * std::abs(pz))
                    break;
                t *= 0.5;
                if (t < 1e-20)
                    throw ConvergenceError("solve_subproblem: step size collapsed");
                z_new = project(D, z - t * g);
            }
        }
        if (!z_new.allFinite())
            throw ConvergenceError("solve_subproblem: non-finite iterate");
        double res = (z_new - z).norm();
        z = std::move(z_new);
        if (res <= tol)
            return z;
    }
    throw ConvergenceError("solve_subproblem: max iterations exceeded");
}

Vec nesterov_ep_solve(const Bifunction& f, const ConvexSet& D, const Vec& y_hat, int N, double mu,
                      double L, NesterovState* state) {
    if (!(mu > 0) || !(L > 0))
        throw Error("nesterov_ep_solve: mu and L must be positive");
    if (N < 1)
        throw Error("nesterov_ep_solve: N must be at least 1");
    require_dim(y_hat, D.dim(), "nesterov_ep_solve");

    const double ratio = mu / L;
    std::vector<double> lambda{1.0};
    double S = 1.0;
    Vec w = solve_subproblem(f, {{y_hat, 1.0}}, L, D);
    std::vector<Vec> ws{w};
    Vec out_sum = w;

    // Linear case keeps running sums; otherwise anchors accumulate.
    Vec lin_sum;
    if (f.linear_in_y())
        lin_sum = w - f.field(w) / mu;
    std::vector<Anchor> anchors;
    if (!f.linear_in_y())
        anchors.push_back({w, 1.0});

    Vec z;
    for (int n = 0; n < N; ++n) {
        if (f.linear_in_y())
            z = project(D, lin_sum / S);
        else
            z = solve_subproblem(f, anchors, mu, D);
        Vec w_next = solve_subproblem(f, {{z, 1.0}}, L, D);
        double lam = ratio * S;
        lambda.push_back(lam);
        S += lam;
        out_sum += lam * w_next;
        if (f.linear_in_y())
            lin_sum += lam * (w_next - f.field(w_next) / mu);
        else
            anchors.push_back({w_next, lam});
        ws.push_back(w_next);
        if (S > 1e200) {
            double s = 1.0 / S;
            for (auto& l : lambda)
                l *= s;
            for (auto& a : anchors)
                a.weight *= s;
            out_sum *= s;
            if (f.linear_in_y())
                lin_sum *= s;
            S = 1.0;
        }
    }
    Vec result = out_sum / S;
    if (state) {
        state->lambda = std::move(lambda);
        state->S = S;
        state->w_points = std::move(ws);
        state->z_current = z;
    }
    return result;
}

SubgradientResult subgradient_ep_solve(const Bifunction& f, const ConvexSet& D, const Vec& w0,
                                       double delta, const SubgradientSchedule& sched,
                                       int max_iter) {
    if (!(delta > 0))
        throw Error("subgradient_ep_solve: delta must be positive");
    require_dim(w0, D.dim(), "subgradient_ep_solve");
    Vec w = w0;
    for (int j = 0; j < max_iter; ++j) {
        Vec g = f.grad2(w, w);
        double gamma = std::max(sched.rho(j), g.norm());
        Vec w_next = project(D, w - (sched.beta(j) / gamma) * g);
        if (!w_next.allFinite())
            return {w, j, false};
        double step = (w_next - w).norm();
        w = std::move(w_next);
        if (step < delta)
            return {w, j + 1, true};
    }
    return {w, max_iter, false};
}

namespace {

double ascend(const Bifunction& f, const ConvexSet& D, double mu, const Vec& y, Vec x) {
    auto phi = [&](const Vec& u) { return f(u, y) + 0.5 * mu * (u - y).squaredNorm(); };
    const double h = kFdStep;
    double t = 1.0;
    double val = phi(x);
    for (int it = 0; it < 200; ++it) {
        Vec g(x.size());
        Vec xp = x, xm = x;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            xp[i] = x[i] + h;
            xm[i] = x[i] - h;
            g[i] = (phi(xp) - phi(xm)) / (2 * h);
            xp[i] = xm[i] = x[i];
        }
        bool moved = false;
        while (t > 1e-12) {
            Vec cand = project(D, x + t * g);
            double v = phi(cand);
            if (v > val) {
                moved = (cand - x).norm() > 1e-12;
                x = std::move(cand);
                val = v;
                t *= 2;
                break;
            }
            t *= 0.5;
        }
        if (!moved)
            break;
    }
    return val;
}

}  // namespace

double dual_gap(const Bifunction& f, const ConvexSet& D, double mu, const Vec& y, int n_starts,
                std::uint64_t seed, Exec exec) {
    require_dim(y, D.dim(), "dual_gap");
    double best = ascend(f, D, mu, y, y);
    if (exec == Exec::Parallel) {
        detail::ParallelErrors errors;
#pragma omp parallel for reduction(max : best) schedule(static)
        for (int s = 0; s < n_starts; ++s) {
            errors.run([&] {
                Rng rng = rng_for(seed, static_cast<std::uint64_t>(s));
                best = std::max(best, ascend(f, D, mu, y, sample_point(D, rng)));
            });
        }
        errors.rethrow();
    } else {
        for (int s = 0; s < n_starts; ++s) {
            Rng rng = rng_for(seed, static_cast<std::uint64_t>(s));
            best = std::max(best, ascend(f, D, mu, y, sample_point(D, rng)));
        }
    }
    return best;
}

}  // namespace qepkit
