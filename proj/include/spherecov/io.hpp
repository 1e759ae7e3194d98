#pragma once

// Plain-text formats: the tabulated model file and lon/lat point CSV.
// Doubles are written with 17 significant digits so text round trips are exact.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spherecov/covariance.hpp"
#include "spherecov/error.hpp"
#include "spherecov/sphere_geom.hpp"

namespace spherecov {

inline std::string format_double(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return {buf, static_cast<std::size_t>(len)};
}

inline std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size() || text.empty()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

namespace detail {

/// "key=value key=value" tokens.
inline std::map<std::string, std::string> parse_assignments(std::string_view line,
                                                            std::size_t line_no) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw input_error("line " + std::to_string(line_no) + ": expected key=value, got '" + tok +
                        "'");
    }
    out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

inline double require_number(const std::map<std::string, std::string>& kv, const std::string& key,
                             std::size_t line_no) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    throw input_error("line " + std::to_string(line_no) + ": missing '" + key + "='");
  }
  const auto v = parse_double(it->second);
  if (!v) {
    throw input_error("line " + std::to_string(line_no) + ": '" + key + "' is not a number");
  }
  return *v;
}

inline std::vector<double> parse_numbers(std::string_view line, std::size_t expected,
                                         std::size_t line_no) {
  const auto fields = split_fields(line);
  if (fields.size() != expected) {
    throw input_error("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(expected) + " fields, got " + std::to_string(fields.size()));
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const auto f : fields) {
    const auto v = parse_double(f);
    if (!v) {
      throw input_error("line " + std::to_string(line_no) + ": '" + std::string(f) +
                        "' is not a number");
    }
    out.push_back(*v);
  }
  return out;
}

/// Reads the next line, stripping a trailing CR; false at end of stream.
inline bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
  if (!std::getline(in, line)) return false;
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace detail

inline constexpr std::size_t default_curve_points = 1024;

/// (d, C) samples of the table on a uniform grid over [0, pi], endpoints included.
inline std::vector<std::pair<double, double>> sample_curve(const TabulatedCovariance& table,
                                                           std::size_t n_points = default_curve_points) {
  std::vector<std::pair<double, double>> out;
  out.reserve(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double d = n_points == 1 ? 0.0 : pi * static_cast<double>(i) / static_cast<double>(n_points - 1);
    out.emplace_back(d, evaluate(table, d));
  }
  return out;
}

inline void write_curve_csv(std::ostream& out, const TabulatedCovariance& table,
                            std::size_t n_points = default_curve_points) {
  out << "d,C\n";
  for (const auto& [d, c] : sample_curve(table, n_points)) {
    out << format_double(d) << ',' << format_double(c) << '\n';
  }
}

/// Model file: provenance header, optional nugget/sill line, a (d, C) curve for
/// readers that only want to plot, then the exact table.
inline void write_model(std::ostream& out, const CovarianceModel& model) {
  const auto& t = model.structure;
  out << "range=" << format_double(t.range()) << " mu=" << format_double(t.mu())
      << " nu=" << format_double(t.nu()) << " n_steps=" << t.n_steps() << '\n';
  out << "nugget=" << format_double(model.nugget)
      << " partial_sill=" << format_double(model.partial_sill) << '\n';
  write_curve_csv(out, t);
  out << "#table support=" << format_double(t.support())
      << " nonnegative=" << (t.nonnegative() ? 1 : 0) << '\n';
  out << "#breakpoints " << t.breakpoints().size() << '\n';
  for (double b : t.breakpoints()) out << format_double(b) << '\n';
  out << "#pieces " << t.pieces().size() << '\n';
  out << "lo,hi,c0,c1,c2,c3\n";
  for (const auto& p : t.pieces()) {
    out << format_double(p.lo) << ',' << format_double(p.hi);
    for (double c : p.coef) out << ',' << format_double(c);
    out << '\n';
  }
  if (!out) throw io_error("failed writing model file");
}

inline void write_table(std::ostream& out, const TabulatedCovariance& table) {
  write_model(out, CovarianceModel{0.0, 1.0, table});
}

inline CovarianceModel read_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    return input_error("model file line " + std::to_string(line_no) + ": " + what);
  };
  if (!detail::next_line(in, line, line_no)) throw fail("empty model file");
  const auto head = detail::parse_assignments(line, line_no);
  SmoothKernelParams prov;
  prov.range = detail::require_number(head, "range", line_no);
  prov.mu = detail::require_number(head, "mu", line_no);
  prov.nu = detail::require_number(head, "nu", line_no);
  const double n_steps = detail::require_number(head, "n_steps", line_no);
  if (!(n_steps >= 1.0) || n_steps != std::floor(n_steps)) throw fail("bad n_steps");

  CovarianceModel model;
  // Skip the optional nugget line and the plotting curve up to the table block.
  std::optional<double> support;
  bool nonnegative = true;
  while (detail::next_line(in, line, line_no)) {
    if (line.starts_with("nugget=")) {
      const auto kv = detail::parse_assignments(line, line_no);
      model.nugget = detail::require_number(kv, "nugget", line_no);
      model.partial_sill = detail::require_number(kv, "partial_sill", line_no);
    } else if (line.starts_with("#table")) {
      const auto kv = detail::parse_assignments(std::string_view(line).substr(6), line_no);
      support = detail::require_number(kv, "support", line_no);
      nonnegative = detail::require_number(kv, "nonnegative", line_no) != 0.0;
      break;
    }
  }
  if (!support) throw fail("missing #table block");

  auto read_count = [&](std::string_view tag) {
    if (!detail::next_line(in, line, line_no) || !line.starts_with(tag)) {
      throw fail("expected '" + std::string(tag) + " <count>'");
    }
    const auto v = parse_double(std::string_view(line).substr(tag.size()));
    if (!v || *v < 0.0 || *v != std::floor(*v)) throw fail("bad count");
    return static_cast<std::size_t>(*v);
  };

  std::vector<double> breakpoints(read_count("#breakpoints"));
  for (double& b : breakpoints) {
    if (!detail::next_line(in, line, line_no)) throw fail("truncated breakpoints");
    b = detail::parse_numbers(line, 1, line_no)[0];
  }
  std::vector<CubicPiece> pieces(read_count("#pieces"));
  if (!detail::next_line(in, line, line_no) || line != "lo,hi,c0,c1,c2,c3") {
    throw fail("expected piece header");
  }
  for (auto& p : pieces) {
    if (!detail::next_line(in, line, line_no)) throw fail("truncated pieces");
    const auto v = detail::parse_numbers(line, 6, line_no);
    p = CubicPiece{v[0], v[1], {v[2], v[3], v[4], v[5]}};
  }
  for (std::size_t i = 1; i < pieces.size(); ++i) {
    if (!(pieces[i].lo >= pieces[i - 1].lo)) throw fail("pieces out of order");
  }
  model.structure = TabulatedCovariance(prov, static_cast<std::size_t>(n_steps), *support,
                                        nonnegative, std::move(breakpoints), std::move(pieces));
  model.validate();
  return model;
}

/// One CSV record: location in degrees plus the trailing numeric columns.
struct PointRecord {
  double lon_deg = 0.0;
  double lat_deg = 0.0;
  std::vector<double> values;
};

struct PointTable {
  std::vector<std::string> header;
  std::vector<PointRecord> rows;
};

/// Reads a headed CSV whose first two columns are lon_deg, lat_deg. When
/// value_columns is set, that many columns must follow.
inline PointTable read_points(std::istream& in, std::optional<std::size_t> value_columns) {
  PointTable table;
  std::string line;
  std::size_t line_no = 0;
  while (detail::next_line(in, line, line_no)) {
    if (!line.empty() && line.front() != '#') break;
  }
  if (line_no == 0 || line.empty() || line.front() == '#') {
    throw input_error("line " + std::to_string(line_no) + ": missing CSV header");
  }
  for (const auto f : split_fields(line)) table.header.emplace_back(f);
  if (table.header.size() < 2 || table.header[0] != "lon_deg" || table.header[1] != "lat_deg") {
    throw input_error("line " + std::to_string(line_no) +
                      ": header must start with lon_deg,lat_deg");
  }
  const std::size_t n_cols = table.header.size();
  if (value_columns && n_cols < 2 + *value_columns) {
    throw input_error("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(2 + *value_columns) + " columns in header");
  }
  while (detail::next_line(in, line, line_no)) {
    if (line.empty() || line.front() == '#') continue;
    const auto v = detail::parse_numbers(line, n_cols, line_no);
    PointRecord rec{v[0], v[1], {v.begin() + 2, v.end()}};
    if (!(rec.lat_deg >= -90.0 && rec.lat_deg <= 90.0) || !std::isfinite(rec.lon_deg)) {
      throw input_error("line " + std::to_string(line_no) + ": coordinates out of range");
    }
    table.rows.push_back(std::move(rec));
  }
  return table;
}

inline void write_points(std::ostream& out, const PointTable& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& r : table.rows) {
    out << format_double(r.lon_deg) << ',' << format_double(r.lat_deg);
    for (double v : r.values) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw io_error("failed writing CSV output");
}

}  // namespace spherecov
