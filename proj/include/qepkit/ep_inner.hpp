#pragma once

#include "qepkit/core.hpp"

#include <functional>
#include <vector>

namespace qepkit {

struct SubgradientSchedule {
    std::function<double(int)> beta;
    std::function<double(int)> rho;

    // beta_j = beta0 / (j + 1), rho_j = rho.
    static SubgradientSchedule harmonic(double beta0 = 1.0, double rho = 1.0);
};

struct Anchor {
    Vec point;
    double weight = 1.0;
};

// argmin over z in D of sum_i weight_i * [f(point_i, z) + quad_coeff/2 |z - point_i|^2].
Vec solve_subproblem(const Bifunction& f, const std::vector<Anchor>& anchors, double quad_coeff,
                     const ConvexSet& D, double tol = 1e-10, int max_iter = 50000);

struct NesterovState {
    std::vector<double> lambda;  // rescaled together with S when S grows large
    double S = 0.0;
    std::vector<Vec> w_points;
    Vec z_current;
};

Vec nesterov_ep_solve(const Bifunction& f, const ConvexSet& D, const Vec& y_hat, int N, double mu,
                      double L, NesterovState* state = nullptr);

struct SubgradientResult {
    Vec w;
    int iterations = 0;
    bool converged = false;
};

SubgradientResult subgradient_ep_solve(const Bifunction& f, const ConvexSet& D, const Vec& w0,
                                       double delta, const SubgradientSchedule& sched,
                                       int max_iter);

// sup over x in D of f(x, y) + mu/2 |x - y|^2, by multi-start projected ascent.
double dual_gap(const Bifunction& f, const ConvexSet& D, double mu, const Vec& y, int n_starts = 16,
                std::uint64_t seed = 0, Exec exec = Exec::Parallel);

}  // namespace qepkit
