#pragma once

#include "qepkit/geometry.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qepkit {

struct Bifunction {
    std::function<double(const Vec&, const Vec&)> eval;
    // Element of the subdifferential of f(x, .) at y. Optional.
    std::function<Vec(const Vec&, const Vec&)> subgrad2;
    std::optional<double> mu;
    std::optional<double> lip;
    // Set when f(x, y) = <F(x), y - x>.
    std::function<Vec(const Vec&)> field;
    // Lipschitz constant of y -> subgrad2(x, y), when known.
    std::optional<double> curv2;

    double operator()(const Vec& x, const Vec& y) const { return eval(x, y); }
    bool has_subgrad2() const { return static_cast<bool>(subgrad2); }
    bool linear_in_y() const { return static_cast<bool>(field); }
    // Analytic subgradient when available, central differences otherwise.
    Vec grad2(const Vec& x, const Vec& y) const;

    static Bifunction from_field(std::function<Vec(const Vec&)> F,
                                 std::optional<double> mu = std::nullopt,
                                 std::optional<double> lip = std::nullopt);
};

constexpr double kFdStep = 1e-6;

Vec fd_grad2(const Bifunction& f, const Vec& x, const Vec& y, double h = kFdStep);

struct QepInstance {
    std::string name;
    int dim = 0;
    ConvexSet C;
    ConstraintMap K;
    Bifunction f;
    // Box enclosing every K(x), x in C. Used for sampling.
    ConvexSet ambient;
    // Coercivity is asymptotic; recorded here rather than checked.
    std::string coercivity_note;
};

enum class Status { Converged, MaxIter, InnerFailure };
const char* to_string(Status s);

struct SolveReport {
    std::vector<Vec> iterates;            // y_k
    std::vector<Vec> projected_iterates;  // x_k = P_C(y_k)
    std::vector<double> residuals;        // ||y_{k+1} - y_k||
    std::vector<int> inner_counts;
    std::vector<double> elapsed_ms;  // cumulative, per outer step
    Vec final_x;
    Vec final_y;
    Status status = Status::MaxIter;
    double wall_ms = 0.0;
    std::vector<std::pair<std::string, double>> info;

    int outer() const { return static_cast<int>(residuals.size()); }
};

struct CheckResult {
    bool verdict = false;
    double worst_violation = 0.0;
};

CheckResult check_projected_solution(const QepInstance& inst, const Vec& x_bar, const Vec& y_bar,
                                     int n_samples, double tol, std::uint64_t seed = 0,
                                     Exec exec = Exec::Parallel);

struct AssumptionReport {
    bool A1_ok = true;
    bool monotone_ok = true;
    double strong_mu_est = 0.0;
    double lipschitz_L_est = 0.0;
};

AssumptionReport check_assumptions(const QepInstance& inst, int n_samples, std::uint64_t seed = 0,
                                   Exec exec = Exec::Parallel);

double subgrad2_fd_check(const Bifunction& f, const Vec& x, const Vec& y);

}  // namespace qepkit
