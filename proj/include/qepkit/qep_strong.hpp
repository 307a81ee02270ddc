#pragma once

#include "qepkit/ep_inner.hpp"

#include <optional>

namespace qepkit {

int inner_budget(double mu, double L, double alpha);
int outer_budget(double r0, double eps, double alpha, double gamma);
long long total_eval_estimate(double r0, double eps, double alpha, double gamma);

struct StrongOptions {
    std::optional<double> alpha;
    std::optional<double> mu;
    std::optional<double> L;
    std::optional<int> n_hat;
    std::optional<int> k_eps;
    int alpha_samples = 200;
    std::uint64_t seed = 0;
};

// Lipschitz constant of x -> P_K(x)(z): exact for moving sets with known nu,
// otherwise 1.1 times a sampled estimate.
double projection_lipschitz_for(const QepInstance& inst, int n_pairs, std::uint64_t seed);

SolveReport solve_strong_qep(const QepInstance& inst, const Vec& y0, double eps,
                             const StrongOptions& opt = {});

}  // namespace qepkit
