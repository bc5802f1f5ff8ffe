#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "covrnn/coverage.hpp"
#include "covrnn/error.hpp"
#include "covrnn/format.hpp"
#include "covrnn/oracle.hpp"

namespace covrnn {

enum class CampaignStatus { completed, target_reached, target_not_reached, exhausted };

inline const char* to_string(CampaignStatus s) {
  switch (s) {
    case CampaignStatus::completed: return "completed";
    case CampaignStatus::target_reached: return "target_reached";
    case CampaignStatus::target_not_reached: return "target_not_reached";
    case CampaignStatus::exhausted: return "exhausted";
  }
  return "?";
}

inline CampaignStatus parse_status(std::string_view s) {
  for (auto st : {CampaignStatus::completed, CampaignStatus::target_reached,
                  CampaignStatus::target_not_reached, CampaignStatus::exhausted}) {
    if (s == to_string(st)) return st;
  }
  throw ParseError("unknown campaign status '" + std::string(s) + "'");
}

struct ReportRecord {
  std::size_t test_cases = 0;
  CoverageRates rates;
  std::size_t adversarial_count = 0;
  std::optional<double> mean_perturbation;  // absent until the first adversarial example
  friend bool operator==(const ReportRecord&, const ReportRecord&) = default;
};

// State of the campaign right after a test case is committed.
struct ReportSnapshot {
  std::size_t test_cases = 0;
  CoverageRates rates;
  std::size_t adversarial_count = 0;
  double perturbation_sum = 0.0;  // sum of distances of the adversarial examples
};

struct CampaignReport {
  std::vector<std::pair<std::string, std::string>> settings;
  std::optional<Symbolizer> symbolizer;
  CoverageRates initial;
  std::vector<ReportRecord> records;

  CoverageTimes times;
  AdversarialCurve curve;
  std::size_t generated = 0;
  std::size_t valid = 0;
  std::size_t suite_size = 0;
  std::optional<std::size_t> minimal_suite_size;
  CampaignStatus status = CampaignStatus::completed;

  CoverageRates final_rates() const { return records.empty() ? initial : records.back().rates; }
  std::size_t adversarial_count() const { return records.empty() ? 0 : records.back().adversarial_count; }
  std::optional<double> mean_perturbation() const {
    return records.empty() ? std::nullopt : records.back().mean_perturbation;
  }
};

inline void append_record(CampaignReport& report, const ReportSnapshot& snap) {
  if (!report.records.empty() && snap.test_cases <= report.records.back().test_cases) {
    throw Error("report counter must increase: got " + std::to_string(snap.test_cases) + " after " +
                std::to_string(report.records.back().test_cases));
  }
  ReportRecord r;
  r.test_cases = snap.test_cases;
  r.rates = snap.rates;
  r.adversarial_count = snap.adversarial_count;
  if (snap.adversarial_count > 0) {
    r.mean_perturbation = snap.perturbation_sum / static_cast<double>(snap.adversarial_count);
  }
  report.records.push_back(r);
}

// ---------------------------------------------------------------------------
// Summary

struct Summary {
  std::string status;
  std::size_t test_cases = 0;
  std::optional<std::size_t> minimal_suite_size;
  std::size_t generated = 0;
  std::size_t valid = 0;
  CoverageRates final_rates;
  std::size_t adversarial_count = 0;
  std::optional<double> mean_perturbation;
  double adversarial_curve_area = 0.0;
  std::vector<std::pair<std::string, std::string>> settings;
  friend bool operator==(const Summary&, const Summary&) = default;
};

inline Summary summarize(const CampaignReport& r) {
  Summary s;
  s.status = to_string(r.status);
  s.test_cases = r.suite_size;
  s.minimal_suite_size = r.minimal_suite_size;
  s.generated = r.generated;
  s.valid = r.valid;
  s.final_rates = r.final_rates();
  s.adversarial_count = r.adversarial_count();
  s.mean_perturbation = r.mean_perturbation();
  s.adversarial_curve_area = r.curve.area;
  s.settings = r.settings;
  return s;
}

inline nlohmann::ordered_json summary_to_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["status"] = s.status;
  j["test_cases"] = s.test_cases;
  j["minimal_suite_size"] = s.minimal_suite_size ? nlohmann::ordered_json(*s.minimal_suite_size) : nullptr;
  j["generated"] = s.generated;
  j["valid"] = s.valid;
  j["final_rates"] = {{"cell", s.final_rates.cell},
                      {"gate", s.final_rates.gate},
                      {"seq_pos", s.final_rates.seq_pos},
                      {"seq_neg", s.final_rates.seq_neg}};
  j["adversarial_count"] = s.adversarial_count;
  j["mean_adversarial_perturbation"] =
      s.mean_perturbation ? nlohmann::ordered_json(*s.mean_perturbation) : nullptr;
  j["adversarial_curve_area"] = s.adversarial_curve_area;
  nlohmann::ordered_json settings = nlohmann::ordered_json::object();
  for (const auto& [k, v] : s.settings) settings[k] = v;
  j["settings"] = std::move(settings);
  return j;
}

inline Summary summary_from_json(const nlohmann::ordered_json& j) {
  Summary s;
  try {
    s.status = j.at("status").get<std::string>();
    s.test_cases = j.at("test_cases").get<std::size_t>();
    if (!j.at("minimal_suite_size").is_null()) s.minimal_suite_size = j["minimal_suite_size"].get<std::size_t>();
    s.generated = j.at("generated").get<std::size_t>();
    s.valid = j.at("valid").get<std::size_t>();
    const auto& fr = j.at("final_rates");
    s.final_rates = {fr.at("cell").get<double>(), fr.at("gate").get<double>(), fr.at("seq_pos").get<double>(),
                     fr.at("seq_neg").get<double>()};
    s.adversarial_count = j.at("adversarial_count").get<std::size_t>();
    if (!j.at("mean_adversarial_perturbation").is_null()) {
      s.mean_perturbation = j["mean_adversarial_perturbation"].get<double>();
    }
    s.adversarial_curve_area = j.at("adversarial_curve_area").get<double>();
    for (const auto& [k, v] : j.at("settings").items()) s.settings.emplace_back(k, v.get<std::string>());
  } catch (const nlohmann::ordered_json::exception& e) {
    throw ParseError(std::string("summary: ") + e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Campaign log. Human-readable, one fact per line, and complete enough that
// the summary and CSV series can be regenerated from it.

namespace detail {

inline std::string rates_fields(const CoverageRates& r) {
  return "cell=" + fmt_double(r.cell) + " gate=" + fmt_double(r.gate) + " seq_pos=" + fmt_double(r.seq_pos) +
         " seq_neg=" + fmt_double(r.seq_neg);
}

inline std::string join_doubles(const Vector& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ',';
    out += fmt_double(v[k]);
  }
  return out;
}

inline Vector split_doubles(const std::string& s) {
  Vector out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(parse_double(part));
  return out;
}

// key=value fields after the line's leading word.
class Fields {
 public:
  explicit Fields(const std::string& rest) {
    std::istringstream in(rest);
    std::string tok;
    while (in >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw ParseError("log: expected key=value, got '" + tok + "'");
      kv_.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
    }
  }
  const std::string& at(const std::string& key) const {
    for (const auto& [k, v] : kv_) {
      if (k == key) return v;
    }
    throw ParseError("log: missing field '" + key + "'");
  }

 private:
  std::vector<std::pair<std::string, std::string>> kv_;
};

inline CoverageRates read_rates(const Fields& f) {
  return {parse_double(f.at("cell")), parse_double(f.at("gate")), parse_double(f.at("seq_pos")),
          parse_double(f.at("seq_neg"))};
}

}  // namespace detail

inline std::string format_log(const CampaignReport& r) {
  std::ostringstream out;
  out << "# covrnn campaign log\n";
  for (const auto& [k, v] : r.settings) out << "config " << k << ' ' << v << '\n';
  if (r.symbolizer) {
    const auto& sym = *r.symbolizer;
    for (std::size_t k = 0; k < sym.pos_bounds.size(); ++k) {
      out << "symbolizer t=" << sym.range.lo + k << " pos=" << detail::join_doubles(sym.pos_bounds[k])
          << " neg=" << detail::join_doubles(sym.neg_bounds[k]) << '\n';
    }
  }
  out << "initial " << detail::rates_fields(r.initial) << '\n';
  for (const auto& rec : r.records) {
    out << "record test_cases=" << rec.test_cases << ' ' << detail::rates_fields(rec.rates)
        << " adversarial=" << rec.adversarial_count << " mean_perturbation=" << fmt_optional(rec.mean_perturbation)
        << '\n';
  }
  for (std::size_t t = 0; t < r.times.cell.size(); ++t) {
    out << "cell_times t=" << t + 1 << " count=" << r.times.cell[t] << '\n';
  }
  for (std::size_t t = 0; t < r.times.gate.size(); ++t) {
    out << "gate_times t=" << t + 1 << " count=" << r.times.gate[t] << '\n';
  }
  for (const auto& [p, c] : r.times.seq_pos) out << "seq_pos_times pattern=" << p << " count=" << c << '\n';
  for (const auto& [p, c] : r.times.seq_neg) out << "seq_neg_times pattern=" << p << " count=" << c << '\n';
  for (std::size_t k = 0; k < r.curve.radii.size(); ++k) {
    out << "curve radius=" << fmt_double(r.curve.radii[k]) << " count=" << r.curve.counts[k] << '\n';
  }
  out << "curve_area value=" << fmt_double(r.curve.area) << '\n';
  out << "yield generated=" << r.generated << " valid=" << r.valid << '\n';
  out << "suite size=" << r.suite_size << " minimal="
      << (r.minimal_suite_size ? std::to_string(*r.minimal_suite_size) : std::string("NA")) << '\n';
  out << "status " << to_string(r.status) << '\n';
  return out.str();
}

inline CampaignReport parse_log(std::istream& in) {
  CampaignReport r;
  std::string line;
  std::size_t lineno = 0;
  bool saw_status = false;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      const auto sp = line.find(' ');
      const std::string head = line.substr(0, sp);
      const std::string rest = sp == std::string::npos ? std::string() : line.substr(sp + 1);
      if (head == "config") {
        const auto sp2 = rest.find(' ');
        r.settings.emplace_back(rest.substr(0, sp2), sp2 == std::string::npos ? "" : rest.substr(sp2 + 1));
        continue;
      }
      if (head == "status") {
        r.status = parse_status(rest);
        saw_status = true;
        continue;
      }
      const detail::Fields f(rest);
      if (head == "symbolizer") {
        if (!r.symbolizer) r.symbolizer.emplace();
        auto& sym = *r.symbolizer;
        const std::size_t t = parse_count(f.at("t"));
        if (sym.pos_bounds.empty()) sym.range.lo = t;
        sym.range.hi = t;
        sym.pos_bounds.push_back(detail::split_doubles(f.at("pos")));
        sym.neg_bounds.push_back(detail::split_doubles(f.at("neg")));
        sym.symbol_count = sym.pos_bounds.back().size() + 1;
      } else if (head == "initial") {
        r.initial = detail::read_rates(f);
      } else if (head == "record") {
        ReportRecord rec;
        rec.test_cases = parse_count(f.at("test_cases"));
        rec.rates = detail::read_rates(f);
        rec.adversarial_count = parse_count(f.at("adversarial"));
        rec.mean_perturbation = parse_optional(f.at("mean_perturbation"));
        r.records.push_back(rec);
      } else if (head == "cell_times") {
        r.times.cell.push_back(parse_count(f.at("count")));
      } else if (head == "gate_times") {
        r.times.gate.push_back(parse_count(f.at("count")));
      } else if (head == "seq_pos_times") {
        r.times.seq_pos[f.at("pattern")] = parse_count(f.at("count"));
      } else if (head == "seq_neg_times") {
        r.times.seq_neg[f.at("pattern")] = parse_count(f.at("count"));
      } else if (head == "curve") {
        r.curve.radii.push_back(parse_double(f.at("radius")));
        r.curve.counts.push_back(parse_count(f.at("count")));
      } else if (head == "curve_area") {
        r.curve.area = parse_double(f.at("value"));
      } else if (head == "yield") {
        r.generated = parse_count(f.at("generated"));
        r.valid = parse_count(f.at("valid"));
      } else if (head == "suite") {
        r.suite_size = parse_count(f.at("size"));
        const auto& m = f.at("minimal");
        if (m != "NA") r.minimal_suite_size = parse_count(m);
      } else {
        throw ParseError("unknown entry '" + head + "'");
      }
    }
  } catch (const ParseError& e) {
    throw ParseError("log line " + std::to_string(lineno) + ": " + e.what());
  }
  if (!saw_status) throw ParseError("log has no status line (truncated?)");
  return r;
}

inline CampaignReport load_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open log " + path.string());
  return parse_log(in);
}

// ---------------------------------------------------------------------------
// Export

struct ExportPaths {
  std::filesystem::path log;
  std::filesystem::path summary;
  std::filesystem::path coverage_csv;
  std::filesystem::path curve_csv;
  std::filesystem::path times_csv;
  std::filesystem::path suite;

  /// Everything lands next to the log file.
  static ExportPaths beside(const std::filesystem::path& log_path) {
    const auto dir = log_path.parent_path();
    return {log_path,
            dir / "summary.json",
            dir / "coverage.csv",
            dir / "adversarial_curve.csv",
            dir / "coverage_times.csv",
            dir / "suite.json"};
  }
};

inline std::string coverage_csv(const CampaignReport& r) {
  std::string out = "test_cases,cell_rate,gate_rate,seq_pos_rate,seq_neg_rate,adversarial_count,mean_perturbation\n";
  for (const auto& rec : r.records) {
    out += std::to_string(rec.test_cases) + ',' + fmt_double(rec.rates.cell) + ',' + fmt_double(rec.rates.gate) +
           ',' + fmt_double(rec.rates.seq_pos) + ',' + fmt_double(rec.rates.seq_neg) + ',' +
           std::to_string(rec.adversarial_count) + ',' +
           (rec.mean_perturbation ? fmt_double(*rec.mean_perturbation) : std::string()) + '\n';
  }
  return out;
}

inline std::string curve_csv(const CampaignReport& r) {
  std::string out = "radius,adversarial_count\n";
  for (std::size_t k = 0; k < r.curve.radii.size(); ++k) {
    out += fmt_double(r.curve.radii[k]) + ',' + std::to_string(r.curve.counts[k]) + '\n';
  }
  return out;
}

inline std::string times_csv(const CampaignReport& r) {
  std::string out = "metric,condition,count\n";
  for (std::size_t t = 0; t < r.times.cell.size(); ++t) {
    out += "cell," + std::to_string(t + 1) + ',' + std::to_string(r.times.cell[t]) + '\n';
  }
  for (std::size_t t = 0; t < r.times.gate.size(); ++t) {
    out += "gate," + std::to_string(t + 1) + ',' + std::to_string(r.times.gate[t]) + '\n';
  }
  for (const auto& [p, c] : r.times.seq_pos) out += "seq_pos," + p + ',' + std::to_string(c) + '\n';
  for (const auto& [p, c] : r.times.seq_neg) out += "seq_neg," + p + ',' + std::to_string(c) + '\n';
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

/// Writes the log, summary JSON and the three CSV series (not the suite).
inline void export_report(const CampaignReport& report, const ExportPaths& paths) {
  write_text(paths.log, format_log(report));
  write_text(paths.summary, summary_to_json(summarize(report)).dump(2) + '\n');
  write_text(paths.coverage_csv, coverage_csv(report));
  write_text(paths.curve_csv, curve_csv(report));
  write_text(paths.times_csv, times_csv(report));
}

}  // namespace covrnn
