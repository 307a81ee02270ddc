#pragma once

#include "qepkit/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace qepkit {

struct Player {
    int dim = 1;
    ConvexSet C;
    // Feasible set of this player given the full profile.
    std::function<ConvexSet(const Vec&)> K;
    // Gradient of theta_i in the player's own variables, from the full profile.
    std::function<Vec(const Vec&)> grad_theta;
    // Optional payoff, used by grid cross-checks.
    std::function<double(const Vec&)> theta;
};

struct GnepInstance {
    std::string name;
    std::vector<Player> players;
    ConvexSet ambient;

    int total_dim() const;
    std::vector<int> offsets() const;
    // G(y) = (-grad_theta_i(y))_i
    Vec G(const Vec& y) const;
};

QepInstance gnep_to_qep(const GnepInstance& g);

constexpr double kJacobianStep = 1e-5;

Mat fd_jacobian(const std::function<Vec(const Vec&)>& G, const Vec& x, double h = kJacobianStep);

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
Vec jacobi_eigenvalues(Mat S, double tol = 1e-14, int max_sweeps = 100);

double estimate_mu(const GnepInstance& g, const std::vector<Vec>& samples);
double estimate_L(const GnepInstance& g, const std::vector<Vec>& samples);

// Central-difference gradient of theta over coordinates [offset, offset + dim).
std::function<Vec(const Vec&)> fd_own_gradient(std::function<double(const Vec&)> theta, int offset,
                                               int dim, double h = kFdStep);

}  // namespace qepkit
