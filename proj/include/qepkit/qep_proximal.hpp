#pragma once

#include "qepkit/ep_inner.hpp"

#include <functional>
#include <string>
#include <vector>

namespace qepkit {

struct GammaSchedule {
    enum class Kind { Harmonic, ExpDecay, InverseSquare, LogShift, Custom };
    Kind kind = Kind::Harmonic;
    double param = 1.0;  // c for Harmonic, n for LogShift
    double bound = 1.0;
    std::function<double(int)> custom;

    // k >= 1.
    double operator()(int k) const;
    std::string describe() const;

    static GammaSchedule harmonic(double c = 1.0);
    static GammaSchedule exp_decay();
    static GammaSchedule inverse_square();
    static GammaSchedule log_shift(double n);
    static GammaSchedule make_custom(std::function<double(int)> fn, double bound);
    // "harmonic[:c]", "exp", "invsq", "logshift[:n]". n defaults to dim.
    static GammaSchedule parse(const std::string& spec, int dim);
};

Bifunction regularize(const Bifunction& f, const Vec& y_k, double gamma_k);

struct ProximalOptions {
    SubgradientSchedule inner = SubgradientSchedule::harmonic();
    int inner_max_iter = 2000000;
};

SolveReport solve_proximal_qep(const QepInstance& inst, const Vec& y0, const GammaSchedule& sched,
                               double eps, double inner_delta, int max_outer = 10000,
                               const ProximalOptions& opt = {});

CheckResult check_sstar_membership(const QepInstance& inst, const Vec& y_bar, int n_maps,
                                   int n_points, double tol, std::uint64_t seed = 0,
                                   Exec exec = Exec::Parallel);

std::vector<double> fejer_diagnostic(const SolveReport& report, const Vec& y_star);

}  // namespace qepkit
