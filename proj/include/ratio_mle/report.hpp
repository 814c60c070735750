#pragma once

// Plain-text report formatting: shortest round-trip decimal numbers and
// fixed-column CSV.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace ratio_mle {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Empty field for quantities that do not apply to a row.
inline std::string format_optional(double v) { return std::isnan(v) ? std::string() : format_double(v); }

class CsvTable {
public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& row() {
    rows_.emplace_back();
    return *this;
  }
  CsvTable& cell(std::string_view s) {
    rows_.back().emplace_back(s);
    return *this;
  }
  CsvTable& cell(const char* s) { return cell(std::string_view(s)); }
  CsvTable& cell(const std::string& s) { return cell(std::string_view(s)); }
  CsvTable& cell(double v) { return cell(format_double(v)); }
  CsvTable& cell(std::uint64_t v) { return cell(std::to_string(v)); }
  CsvTable& cell(bool v) { return cell(std::string_view(v ? "true" : "false")); }
  CsvTable& cell(int v) { return cell(std::to_string(v)); }

  std::string str() const {
    std::string out;
    append_line(out, header_);
    for (const auto& r : rows_) append_line(out, r);
    return out;
  }

private:
  static void append_line(std::string& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      const std::string& f = fields[i];
      if (f.find_first_of(",\"\n") != std::string::npos) {
        out += '"';
        for (char ch : f) {
          if (ch == '"') out += '"';
          out += ch;
        }
        out += '"';
      } else {
        out += f;
      }
    }
    out += '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Summary of one empirical bound check at one sample size. Auxiliary
// constants are NaN where they do not apply.
struct BoundCheckReport {
  std::string check_id;
  std::size_t n = 0;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::size_t violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  double max_count = std::numeric_limits<double>::quiet_NaN();
  double A_0 = std::numeric_limits<double>::quiet_NaN();
  double zeta = std::numeric_limits<double>::quiet_NaN();
  double A_n = std::numeric_limits<double>::quiet_NaN();
  double w_n = std::numeric_limits<double>::quiet_NaN();
  double k_wn = std::numeric_limits<double>::quiet_NaN();
  double u_0 = std::numeric_limits<double>::quiet_NaN();
};

inline std::string to_csv(const std::vector<BoundCheckReport>& reports) {
  CsvTable t({"check_id", "n", "replicates", "seed", "violations", "worst_margin", "max_count",
              "A_0", "zeta", "A_n", "w_n", "k_wn", "u_0"});
  for (const auto& r : reports) {
    t.row()
        .cell(r.check_id)
        .cell(static_cast<std::uint64_t>(r.n))
        .cell(static_cast<std::uint64_t>(r.replicates))
        .cell(r.seed)
        .cell(static_cast<std::uint64_t>(r.violations))
        .cell(r.worst_margin)
        .cell(format_optional(r.max_count))
        .cell(format_optional(r.A_0))
        .cell(format_optional(r.zeta))
        .cell(format_optional(r.A_n))
        .cell(format_optional(r.w_n))
        .cell(format_optional(r.k_wn))
        .cell(format_optional(r.u_0));
  }
  return t.str();
}

} // namespace ratio_mle
