#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gtvtest/core_data.hpp"
#include "gtvtest/errors.hpp"
#include "gtvtest/hypothesis.hpp"
#include "gtvtest/simulation.hpp"

namespace gtvtest::io {

inline constexpr int kSchemaVersion = 1;

/// Header row plus string cells. Fields are comma separated; surrounding
/// whitespace is trimmed. Quoting is not supported.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    return std::nullopt;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(
        start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& s, std::size_t row,
                           const std::string& col) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw IoError("row " + std::to_string(row + 1) + ", column '" + col +
                  "': cannot parse '" + s + "' as a number");
  return v;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    if (t.header.empty()) {
      t.header = detail::split(line);
      continue;
    }
    auto cells = detail::split(line);
    if (cells.size() != t.header.size())
      throw IoError("row " + std::to_string(t.rows.size() + 1) + " has " +
                    std::to_string(cells.size()) + " fields, expected " +
                    std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw IoError("empty CSV input");
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_csv(in);
}

/// Columns x1, x2, ... in order; at least x1 must exist.
inline std::vector<std::size_t> coordinate_columns(const CsvTable& t) {
  std::vector<std::size_t> cols;
  for (std::size_t k = 1;; ++k) {
    const auto c = t.column("x" + std::to_string(k));
    if (!c) break;
    cols.push_back(*c);
  }
  if (cols.empty()) throw IoError("CSV has no coordinate column 'x1'");
  return cols;
}

inline std::vector<Point> read_points(const CsvTable& t) {
  const auto cols = coordinate_columns(t);
  std::vector<Point> pts;
  pts.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::vector<double> c(cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k)
      c[k] = detail::parse_double(t.rows[r][cols[k]], r, t.header[cols[k]]);
    pts.emplace_back(std::move(c));
  }
  return pts;
}

inline std::vector<double> read_column(const CsvTable& t,
                                       const std::string& name) {
  const auto c = t.column(name);
  if (!c) throw IoError("CSV has no column '" + name + "'");
  std::vector<double> out(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    out[r] = detail::parse_double(t.rows[r][*c], r, name);
  return out;
}

/// Splits a pooled table by a label column holding "x" or "y".
inline TwoSample read_labelled(const CsvTable& t, const std::string& label_column) {
  const auto c = t.column(label_column);
  if (!c) throw IoError("CSV has no label column '" + label_column + "'");
  const auto pts = read_points(t);
  std::vector<Point> xs, ys;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& v = t.rows[r][*c];
    if (v == "x") xs.push_back(pts[r]);
    else if (v == "y") ys.push_back(pts[r]);
    else
      throw IoError("row " + std::to_string(r + 1) + ": label '" + v +
                    "' is neither 'x' nor 'y'");
  }
  return TwoSample(std::move(xs), std::move(ys));
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

/// Writes x1..xd, then optional label and in_witness columns.
inline void write_points_csv(std::ostream& out, std::span<const Point> pts,
                             std::span<const Label> labels = {},
                             std::span<const char> in_witness = {}) {
  const std::size_t d = pts.empty() ? 0 : pts.front().dim();
  for (std::size_t k = 0; k < d; ++k) out << (k ? "," : "") << 'x' << k + 1;
  if (!labels.empty()) out << ",label";
  if (!in_witness.empty()) out << ",in_witness";
  out << '\n';
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k)
      out << (k ? "," : "") << format_double(pts[i][k]);
    if (!labels.empty()) out << ',' << (labels[i] == Label::X ? 'x' : 'y');
    if (!in_witness.empty()) out << ',' << (in_witness[i] ? 1 : 0);
    out << '\n';
  }
}

inline void write_two_sample_csv(std::ostream& out, const TwoSample& ts) {
  std::vector<Label> labels(ts.n());
  for (std::size_t i = 0; i < ts.n(); ++i) labels[i] = ts.label(i);
  write_points_csv(out, ts.points(), labels);
}

inline std::string rational_string(const Rational& r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

/// Report as JSON. Field order is fixed; runtime_ms is the only field that
/// varies between identical runs and is written last.
inline nlohmann::ordered_json report_to_json(const TestReport& r,
                                             std::optional<double> runtime_ms) {
  nlohmann::ordered_json j;
  j["schema"] = kSchemaVersion;
  j["method"] = to_string(r.method);
  j["statistic"] = r.statistic;
  j["statistic_exact"] =
      r.statistic_exact ? nlohmann::ordered_json(rational_string(*r.statistic_exact))
                        : nlohmann::ordered_json(nullptr);
  j["p_value"] = r.p_value;
  j["critical_value"] = r.critical_value;
  j["alpha"] = r.alpha;
  j["n_permutations"] = r.n_permutations;
  j["reject"] = r.reject;
  j["witness"] = r.witness ? nlohmann::ordered_json(*r.witness)
                           : nlohmann::ordered_json(nullptr);
  j["seed"] = r.seed;
  j["graph_meta"] = {{"type", r.graph_meta.type},
                     {"parameter", r.graph_meta.parameter},
                     {"edges", r.graph_meta.edges}};
  j["runtime_ms"] = runtime_ms ? nlohmann::ordered_json(*runtime_ms)
                               : nlohmann::ordered_json(nullptr);
  return j;
}

inline void write_study_csv(std::ostream& out, const StudyResult& res) {
  out << "method,eta,s,auc,auc_se,trials,seed\n";
  for (const auto& row : res.rows)
    out << row.method << ',' << format_double(row.eta) << ','
        << format_double(row.s) << ',' << format_double(row.auc) << ','
        << format_double(row.auc_se) << ',' << row.trials << ',' << row.seed
        << '\n';
}

inline nlohmann::ordered_json study_to_json(const StudyResult& res) {
  nlohmann::ordered_json j;
  j["schema"] = kSchemaVersion;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : res.rows)
    j["rows"].push_back({{"method", row.method},
                         {"eta", row.eta},
                         {"s", row.s},
                         {"auc", row.auc},
                         {"auc_se", row.auc_se},
                         {"trials", row.trials},
                         {"seed", row.seed}});
  return j;
}

}  // namespace gtvtest::io
