#include "sdsim/csvio.hpp"

#include <algorithm>
#include <fstream>
#include <vector>

#include "sdsim/config.hpp"
#include "sdsim/errors.hpp"

namespace sds::io {

namespace {
std::string num(double v) { return config::format_number(v); }
} // namespace

void write_path_csv(std::ostream& out, const scheme::PathSample& path,
                    bool with_pre_truncation) {
    const std::size_t rows = path.times.size();
    if (rows == 0) throw ConfigError("empty path");
    const std::size_t n = path.y.size() / rows;
    out << "k,t,r";
    for (std::size_t c = 1; c <= n; ++c) out << ",y" << c;
    if (with_pre_truncation)
        for (std::size_t c = 1; c <= n; ++c) out << ",ytilde" << c;
    out << "\n";
    for (std::size_t k = 0; k < rows; ++k) {
        out << k << ',' << num(path.times[k]) << ',' << path.regimes[k] + 1;
        for (std::size_t c = 0; c < n; ++c) out << ',' << num(path.y[k * n + c]);
        if (with_pre_truncation)
            for (std::size_t c = 0; c < n; ++c) out << ',' << num(path.y_tilde[k * n + c]);
        out << "\n";
    }
}

void write_error_table_csv(std::ostream& out, const mc::ErrorTable& table) {
    out << "delta,error,std_error,paths,diverged\n";
    for (const auto& row : table.rows) {
        out << num(row.delta) << ',' << num(row.error) << ',' << num(row.std_error) << ','
            << row.paths << ',' << row.diverged << "\n";
    }
}

void write_moment_trace_csv(std::ostream& out, const mc::MomentTrace& trace) {
    out << "t,moment\n";
    for (std::size_t i = 0; i < trace.times.size(); ++i)
        out << num(trace.times[i]) << ',' << num(trace.moments[i]) << "\n";
}

void write_measure_csv(std::ostream& out, const measure::EmpiricalMeasure& mu) {
    mu.validate();
    out << "x1";
    for (int c = 2; c <= mu.n; ++c) out << ",x" << c;
    out << ",regime,weight\n";
    for (long i = 0; i < mu.count(); ++i) {
        const auto pt = mu.point(i);
        out << num(pt[0]);
        for (int c = 1; c < mu.n; ++c) out << ',' << num(pt[static_cast<std::size_t>(c)]);
        out << ',' << mu.regimes[static_cast<std::size_t>(i)] + 1 << ','
            << num(mu.weights[static_cast<std::size_t>(i)]) << "\n";
    }
}

void write_ecdf_csv(std::ostream& out, std::span<const double> values) {
    if (values.empty()) throw ConfigError("empty sample");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    out << "value,cdf\n";
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        out << num(sorted[i]) << ',' << num(static_cast<double>(i + 1) / n) << "\n";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << content;
    out.flush();
    if (!out) throw ConfigError("write to '" + path + "' failed");
}

} // namespace sds::io
