#pragma once

#include "qepkit/emm.hpp"
#include "qepkit/qep_proximal.hpp"
#include "qepkit/qep_strong.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qepkit {

// A ready-to-run problem with its default run settings.
struct Problem {
    std::string id;
    QepInstance inst;
    std::string algorithm = "proximal";
    Vec y0;
    double eps = 1e-4;
    GammaSchedule gamma = GammaSchedule::harmonic(1.0);
    StrongOptions strong;
    ProximalOptions proximal;
    std::optional<double> inner_delta;  // defaults to eps / 100
    int max_outer = 10000;
    std::optional<Vec> y_star;          // known member of S*
    std::optional<EmmParams> emm;
};

struct BuiltinArgs {
    int n = 0;    // dimension for ex4.2 / ex4.3
    int row = 1;  // preset row for emm2
    std::uint64_t seed = 0;
};

const std::vector<std::string>& builtin_ids();
Problem make_builtin(const std::string& id, const BuiltinArgs& args = {});

SolveReport run_problem(const Problem& p);

// emm2 preset starting points, option 0 or 1.
Vec emm2_start(int row, int option);

// Line-oriented "key = value" instance description.
struct InstanceFile {
    struct Value {
        enum class Type { Text, Array, Matrix } type = Type::Text;
        std::string text;
        std::vector<double> array;
        std::vector<std::vector<double>> matrix;
        bool operator==(const Value&) const = default;
    };
    std::vector<std::pair<std::string, Value>> entries;

    bool has(const std::string& key) const;
    const Value& at(const std::string& key) const;
    std::string text(const std::string& key, const std::string& dflt = "") const;
    double number(const std::string& key, double dflt) const;
    std::vector<double> array(const std::string& key) const;
    Mat matrix(const std::string& key) const;
    void set(const std::string& key, Value v);

    bool operator==(const InstanceFile&) const = default;
};

struct ParseError : Error {
    using Error::Error;
};

InstanceFile parse_instance(const std::string& text);
InstanceFile load_instance(const std::string& path);
std::string serialize_instance(const InstanceFile& f);
Problem instantiate(const InstanceFile& f);

// 17 significant digits, '.' separator.
std::string format_number(double v);
std::string format_vector(const Vec& v, const char* sep = ",");

void write_run_csv(const SolveReport& report, std::ostream& out, bool timing = true);
// Writes <prefix>_error.dat and <prefix>_residual.dat.
void emit_convergence_data(const SolveReport& report, const std::string& prefix,
                           const std::optional<Vec>& x_ref = std::nullopt);

struct OracleResult {
    Vec x;
    double residual = 0.0;
    long evaluations = 0;
};

OracleResult brute_force_oracle(const QepInstance& inst, double grid_resolution,
                                Exec exec = Exec::Parallel);
// min over y in K(x) of gap_x(y) + |x - P_C(y)|; zero exactly at projected solutions.
double oracle_residual(const QepInstance& inst, const Vec& x);

}  // namespace qepkit
