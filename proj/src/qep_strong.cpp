#include "qepkit/qep_strong.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace qepkit {

namespace {

void require_contraction(double alpha, double gamma) {
    if (!(alpha >= 0) || alpha * gamma >= 1.0)
        throw ContractionError("contraction violated: alpha * L / mu = " +
                               std::to_string(alpha * gamma) + " >= 1");
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// Sample a point of C, going through the ambient box when C is unbounded.
Vec sample_in_C(const QepInstance& inst, Rng& rng) {
    auto [lo, hi] = inst.C.bounding_box();
    if (lo.allFinite() && hi.allFinite())
        return sample_point(inst.C, rng);
    return project(inst.C, sample_point(inst.ambient, rng));
}

}  // namespace

int inner_budget(double mu, double L, double alpha) {
    if (!(mu > 0) || !(L > 0))
        throw Error("inner_budget: mu and L must be positive");
    require_contraction(alpha, L / mu);
    double v = (2 * (L + mu) / mu) * std::log(20 * L / (mu - alpha * L));
    return std::max(1, static_cast<int>(std::ceil(v)));
}

int outer_budget(double r0, double eps, double alpha, double gamma) {
    require_contraction(alpha, gamma);
    if (!(r0 > 0) || !(eps > 0))
        throw Error("outer_budget: r0 and eps must be positive");
    double d = 1 - alpha * gamma;
    double v = (2 / d) * std::log(r0 / (eps * d));
    return std::max(1, static_cast<int>(std::ceil(v)));
}

long long total_eval_estimate(double r0, double eps, double alpha, double gamma) {
    require_contraction(alpha, gamma);
    if (!(r0 > 0) || !(eps > 0))
        throw Error("total_eval_estimate: r0 and eps must be positive");
    double d = 1 - alpha * gamma;
    double v = (10 * (1 + gamma) / d) * std::log(20 * gamma / d) * std::log(r0 / (eps * d));
    return std::max(0LL, static_cast<long long>(std::ceil(v)));
}

double projection_lipschitz_for(const QepInstance& inst, int n_pairs, std::uint64_t seed) {
    if (inst.K.is_moving_set && inst.K.nu_lip)
        return *inst.K.nu_lip;
    std::vector<std::pair<Vec, Vec>> pairs;
    std::vector<Vec> probes;
    for (int i = 0; i < n_pairs; ++i) {
        Rng rng = rng_for(seed, static_cast<std::uint64_t>(i));
        Vec u = sample_in_C(inst, rng), v = sample_in_C(inst, rng);
        if ((u - v).norm() > 1e-12)
            pairs.emplace_back(std::move(u), std::move(v));
        probes.push_back(sample_point(inst.ambient, rng));
    }
    return 1.1 * estimate_projection_lipschitz(inst.K, pairs, probes);
}

SolveReport solve_strong_qep(const QepInstance& inst, const Vec& y0, double eps,
                             const StrongOptions& opt) {
    auto t0 = std::chrono::steady_clock::now();
    require_dim(y0, inst.dim, "solve_strong_qep");
    if (!(eps > 0))
        throw Error("solve_strong_qep: eps must be positive");
    const double mu = opt.mu ? *opt.mu : inst.f.mu.value_or(0.0);
    const double L = opt.L ? *opt.L : inst.f.lip.value_or(0.0);
    if (!(mu > 0) || !(L > 0))
        throw Error("solve_strong_qep: mu and L are required");
    const double alpha =
        opt.alpha ? *opt.alpha : projection_lipschitz_for(inst, opt.alpha_samples, opt.seed);
    const double gamma = L / mu;
    require_contraction(alpha, gamma);
    const int N = opt.n_hat ? *opt.n_hat : inner_budget(mu, L, alpha);

    SolveReport rep;
    auto step = [&](const Vec& y) {
        Vec x = project(inst.C, y);
        ConvexSet K = inst.K(x);
        Vec y_hat = project(K, y);
        return std::pair{x, nesterov_ep_solve(inst.f, K, y_hat, N, mu, L)};
    };

    Vec y = y0;
    auto [x, y_next] = step(y);
    const double r0 = (y - y_next).norm();
    const int k_eps = opt.k_eps ? *opt.k_eps : (r0 > 0 ? outer_budget(r0, eps, alpha, gamma) : 1);

    rep.iterates.push_back(y);
    rep.projected_iterates.push_back(x);
    while (true) {
        double r = (y_next - y).norm();
        y = y_next;
        rep.residuals.push_back(r);
        rep.inner_counts.push_back(N);
        rep.iterates.push_back(y);
        rep.projected_iterates.push_back(project(inst.C, y));
        rep.elapsed_ms.push_back(elapsed_ms(t0));
        if (r < eps / 10 || rep.outer() >= k_eps)
            break;
        std::tie(x, y_next) = step(y);
    }
    rep.status = Status::Converged;
    rep.final_y = y;
    rep.final_x = project(inst.C, y);
    rep.info = {{"mu", mu},        {"L", L},         {"alpha", alpha},
                {"n_hat", N},      {"k_eps", k_eps}, {"r0", r0},
                {"total_eval_estimate",
                 r0 > 0 ? static_cast<double>(total_eval_estimate(r0, eps, alpha, gamma)) : 0.0}};
    rep.wall_ms = elapsed_ms(t0);
    return rep;
}

}  // namespace qepkit
