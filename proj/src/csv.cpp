#include "tdid/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tdid {

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream os;
  const int n = traj.x.empty() ? 0 : static_cast<int>(traj.x[0].size());
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  os << "\n";
  for (size_t r = 0; r < traj.rows(); ++r) {
    os << csv_double(traj.t[r]);
    for (int i = 0; i < n; ++i) os << ',' << csv_double(traj.x[r][i]);
    os << "\n";
  }
  return os.str();
}

std::vector<std::string> kappa_column_names(int slots, int n, int l, int m) {
  std::vector<std::string> names;
  for (int i = 0; i < slots; ++i) {
    for (int j = 1; j <= n; ++j)
      names.push_back("A" + std::to_string(i) + "_" + std::to_string(j) + "_hat");
    for (int j = 1; j <= l; ++j)
      names.push_back("D" + std::to_string(i) + "_" + std::to_string(j) + "_hat");
    for (int j = 1; j <= m; ++j)
      names.push_back("G" + std::to_string(i) + "_" + std::to_string(j) + "_hat");
    names.push_back("B" + std::to_string(i) + "_1_hat");
  }
  return names;
}

std::string diagnostics_csv(const std::vector<DiagnosticsRecord>& records,
                            int slots, int n, int l, int m) {
  std::ostringstream os;
  os << "t,eps_norm,e,V,residual";
  for (const auto& name : kappa_column_names(slots, n, l, m)) os << ',' << name;
  os << "\n";
  for (const auto& rec : records) {
    os << csv_double(rec.t) << ',' << csv_double(rec.eps_norm) << ','
       << csv_double(rec.e) << ',' << csv_double(rec.V) << ','
       << csv_double(rec.residual);
    for (Eigen::Index j = 0; j < rec.kappa_hat.size(); ++j)
      os << ',' << csv_double(rec.kappa_hat[j]);
    os << "\n";
  }
  return os.str();
}

std::string pe_report_csv(const PEReport& report) {
  std::ostringstream os;
  os << "window_start,min_eig\n";
  for (const auto& [start, eig] : report.per_window)
    os << csv_double(start) << ',' << csv_double(eig) << "\n";
  return os.str();
}

}  // namespace tdid
