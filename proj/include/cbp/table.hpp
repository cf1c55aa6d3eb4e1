#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cbp/error.hpp"

namespace cbp {

inline constexpr const char* kArtifactVersion = "cb 1.0.0";

//! 64-bit FNV-1a
inline std::uint64_t fnv1a(std::string const& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

//! 17 significant digits; lossless for doubles.
inline std::string format17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct TableRow {
  double t;
  double probe;
  double finite_t_value;
  double limit_value;
  double abs_error;  //!< |finite_t_value - limit_value|
};

/*!
 * Rows of (t, probe, finite-t value, limit value, |difference|) with a
 * metadata header. `probe_name` labels the probe column (theta, y, lambda).
 */
struct TransformTable {
  std::string probe_name = "theta";
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<TableRow> rows;

  void add(double t, double probe, double finite, double limit) {
    rows.push_back({t, probe, finite, limit, std::abs(finite - limit)});
  }

  //! max abs_error over the rows at the largest t
  double max_error_at_largest_t() const {
    require(!rows.empty(), "empty table");
    double tmax = rows.front().t, e = 0;
    for (auto const& r : rows) tmax = std::max(tmax, r.t);
    for (auto const& r : rows)
      if (r.t == tmax) e = std::max(e, r.abs_error);
    return e;
  }

  //! (t, max abs_error over probes) in order of first appearance
  std::vector<std::pair<double, double>> error_by_t() const {
    std::vector<std::pair<double, double>> out;
    for (auto const& r : rows) {
      auto it = std::find_if(out.begin(), out.end(), [&](auto const& p) { return p.first == r.t; });
      if (it == out.end())
        out.emplace_back(r.t, r.abs_error);
      else
        it->second = std::max(it->second, r.abs_error);
    }
    return out;
  }
};

inline void write_csv(std::ostream& os, TransformTable const& table) {
  for (auto const& [k, v] : table.metadata) os << "# " << k << ": " << v << '\n';
  os << "t," << table.probe_name << ",finite_t_value,limit_value,abs_error\n";
  for (auto const& r : table.rows)
    os << format17(r.t) << ',' << format17(r.probe) << ',' << format17(r.finite_t_value) << ','
       << format17(r.limit_value) << ',' << format17(r.abs_error) << '\n';
}

enum class PlotStyle { error_vs_t, cdf_overlay };

/*!
 * Whitespace-delimited plot data.
 *  - error_vs_t:  one line per distinct t: t, max abs_error
 *  - cdf_overlay: one block per t (blank-line separated): probe, finite, limit
 */
inline void emit_plotdata(std::ostream& os, TransformTable const& table, PlotStyle style) {
  require(!table.rows.empty(), "emit_plotdata needs a nonempty table");
  for (auto const& [k, v] : table.metadata) os << "# " << k << ": " << v << '\n';
  if (style == PlotStyle::error_vs_t) {
    os << "# t max_abs_error\n";
    for (auto const& [t, e] : table.error_by_t()) os << format17(t) << ' ' << format17(e) << '\n';
    return;
  }
  os << "# " << table.probe_name << " finite_t_value limit_value\n";
  bool first = true;
  double current = 0;
  for (auto const& r : table.rows) {
    if (first || r.t != current) {
      if (!first) os << "\n\n";
      os << "# t = " << format17(r.t) << '\n';
      current = r.t;
      first = false;
    }
    os << format17(r.probe) << ' ' << format17(r.finite_t_value) << ' '
       << format17(r.limit_value) << '\n';
  }
}

inline void write_file(std::string const& path, std::string const& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::config, "cannot write '" + path + "'");
  os << content;
  if (!os) throw Error(ErrorCode::config, "write to '" + path + "' failed");
}

}  // namespace cbp
