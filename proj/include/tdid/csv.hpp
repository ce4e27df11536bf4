#pragma once

#include <string>
#include <vector>

#include "tdid/identifier.hpp"
#include "tdid/model.hpp"
#include "tdid/signals.hpp"

namespace tdid {

/// Format a double with 17 significant digits.
std::string csv_double(double v);

/// Atomic text-file write (write temp, then rename).
void write_file_atomic(const std::string& path, const std::string& content);

/// Trajectory CSV: header `t,x1,...,xn`, one row per recorded step.
std::string trajectory_csv(const Trajectory& traj);

/// Diagnostics CSV: `t,eps_norm,e,V,residual` then one column per estimate
/// component named `<term><slot>_<index>_hat`.
std::string diagnostics_csv(const std::vector<DiagnosticsRecord>& records,
                            int slots, int n, int l, int m);

/// Column names for the flattened kappa layout.
std::vector<std::string> kappa_column_names(int slots, int n, int l, int m);

/// PE report CSV: `window_start,min_eig`.
std::string pe_report_csv(const PEReport& report);

}  // namespace tdid
