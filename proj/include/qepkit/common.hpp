#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>

namespace qepkit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
    using Error::Error;
};
struct InfeasibleError : Error {
    using Error::Error;
};
struct ConvergenceError : Error {
    using Error::Error;
};
struct SamplingError : Error {
    using Error::Error;
};
struct ContractionError : Error {
    using Error::Error;
};

// Serial runs the reference loop; Parallel runs the OpenMP kernel.
// Both produce identical results for the same seed.
enum class Exec { Serial, Parallel };

using Rng = std::mt19937_64;

// Independent stream for work item `index` under `seed`.
inline Rng rng_for(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + index + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return Rng(z);
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        out[i++] = x;
    return out;
}

inline void require_dim(const Vec& v, Eigen::Index n, const char* what) {
    if (v.size() != n)
        throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(n) +
                             ", got " + std::to_string(v.size()));
}

}  // namespace qepkit
