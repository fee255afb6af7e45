#pragma once

#include <ostream>
#include <span>
#include <string>

#include "sdsim/measure.hpp"
#include "sdsim/montecarlo.hpp"
#include "sdsim/schemes.hpp"

namespace sds::io {

/// Columns k,t,r,y1..yn and, when requested, the pre-truncation states
/// ytilde1..ytilden. Regimes are written 1-based.
void write_path_csv(std::ostream& out, const scheme::PathSample& path,
                    bool with_pre_truncation);

/// Columns delta,error,std_error,paths,diverged.
void write_error_table_csv(std::ostream& out, const mc::ErrorTable& table);

/// Columns t,moment.
void write_moment_trace_csv(std::ostream& out, const mc::MomentTrace& trace);

/// Columns x1..xn,regime,weight. Regimes are written 1-based.
void write_measure_csv(std::ostream& out, const measure::EmpiricalMeasure& mu);

/// Columns value,cdf for the empirical distribution of the sample.
void write_ecdf_csv(std::ostream& out, std::span<const double> values);

/// Writes content to path, throwing ConfigError on any I/O failure.
void write_file(const std::string& path, const std::string& content);

} // namespace sds::io
