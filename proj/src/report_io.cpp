#include "qepkit/harness.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

namespace qepkit {

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_vector(const Vec& v, const char* sep) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i)
            out += sep;
        out += format_number(v[i]);
    }
    return out;
}

void write_run_csv(const SolveReport& report, std::ostream& out, bool timing) {
    const Eigen::Index n = report.iterates.empty() ? 0 : report.iterates.front().size();
    out << "k,residual,inner_iters";
    for (Eigen::Index i = 0; i < n; ++i)
        out << ",x" << i;
    for (Eigen::Index i = 0; i < n; ++i)
        out << ",y" << i;
    out << ",elapsed_ms\n";
    for (int k = 1; k <= report.outer(); ++k) {
        out << k << ',' << format_number(report.residuals[k - 1]) << ','
            << report.inner_counts[k - 1] << ',' << format_vector(report.projected_iterates[k])
            << ',' << format_vector(report.iterates[k]) << ','
            << format_number(timing ? report.elapsed_ms[k - 1] : 0.0) << '\n';
    }
}

void emit_convergence_data(const SolveReport& report, const std::string& prefix,
                           const std::optional<Vec>& x_ref) {
    if (report.projected_iterates.empty())
        throw Error("emit_convergence_data: empty report");
    const Vec ref = x_ref.value_or(report.final_x.size() ? report.final_x
                                                         : report.projected_iterates.back());
    std::ofstream err(prefix + "_error.dat");
    std::ofstream res(prefix + "_residual.dat");
    if (!err || !res)
        throw Error("emit_convergence_data: cannot open " + prefix + "_*.dat");
    err << "# k error\n";
    for (std::size_t k = 0; k < report.projected_iterates.size(); ++k)
        err << k << ' ' << format_number((report.projected_iterates[k] - ref).norm()) << '\n';
    res << "# k residual\n";
    for (int k = 1; k <= report.outer(); ++k)
        res << k << ' ' << format_number(report.residuals[k - 1]) << '\n';
    if (!err || !res)
        throw Error("emit_convergence_data: write failed for " + prefix);
}

}  // namespace qepkit
