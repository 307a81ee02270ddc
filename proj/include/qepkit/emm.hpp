#pragma once

#include "qepkit/gnep.hpp"

#include <array>
#include <vector>

namespace qepkit {

using Interval = std::array<double, 2>;

struct EmmParams {
    int n_producers = 2;
    std::vector<double> A;
    std::vector<double> B;
    std::vector<Interval> b_bounds;
    std::vector<Interval> c_bounds;  // 2-producer variant
    std::vector<Interval> p0_bounds;
    std::vector<Interval> p1_bounds;
    double demand = 1.0;
    int k = 2;
    double alpha = 0.01;  // 10-producer variant: c_i = alpha * p_i^0

    void validate() const;
};

// Each producer occupies 3k = 6 embedded coordinates: (a, a, b, b, c, c).
constexpr int kEmmBlock = 6;

std::vector<double> iso_allocation(const std::vector<double>& A, const std::vector<double>& b,
                                   double D = 1.0);

// (a_i, b_i, c_i) per producer -> embedded vector.
Vec embed_bids(const std::vector<std::array<double, 3>>& bids);
// Embedded vector -> (a_i, b_i, c_i) using slot averages.
std::vector<std::array<double, 3>> extract_bids(const Vec& y);

struct Emm2 {
    GnepInstance gnep;
    QepInstance qep;
};

Emm2 build_emm_2(const EmmParams& p);
QepInstance build_emm_10(const EmmParams& p);

// Players' bids in reduced coordinates: (b_i, c_i) for 2 producers.
GnepInstance reduced_gnep_2(const EmmParams& p);
// Players' bids in reduced coordinates: b_i only, for the 10-producer variant.
GnepInstance reduced_gnep_10(const EmmParams& p);

struct StepBid {
    double p0 = 0.0, p1 = 0.0;
    double beta0 = 0.0, beta1 = 0.0;
};

// Closest step bid per producer in the embedded metric.
std::vector<StepBid> project_bid_to_C(const EmmParams& p, const Vec& y);
// The step bids as an embedded point of C.
Vec embed_step_bids(const std::vector<StepBid>& bids);

struct Prop62 {
    bool condition_i = false;
    bool condition_ii = false;
};
Prop62 check_prop62(const EmmParams& p);

// True when some allocation q_i <= 0 at the bids in y.
bool allocation_nonpositive(const EmmParams& p, const Vec& y);

EmmParams emm2_preset(int row);
// Seeded 10-producer draw: A, B and p0 values.
struct Emm10Draw {
    EmmParams params;
    std::vector<double> p0;
};
Emm10Draw emm10_draw(std::uint64_t seed);
// y0 = scale * e embedded with c_i = alpha * p0_i.
Vec emm10_start(const Emm10Draw& d, double scale);

}  // namespace qepkit
