#pragma once

#include <charconv>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sklab/errors.hpp"
#include "sklab/linear_code.hpp"
#include "sklab/oracle.hpp"
#include "sklab/protocol.hpp"
#include "sklab/source_models.hpp"

namespace sklab {

inline constexpr const char* kArtifactVersion = "0.1.0";
inline constexpr int kReportFormatVersion = 1;

enum class Mode { exact, empirical, both };

inline std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::exact: return "exact";
    case Mode::empirical: return "empirical";
    case Mode::both: return "both";
  }
  return {};
}

inline Mode parse_mode(std::string_view text) {
  if (text == "exact") return Mode::exact;
  if (text == "empirical") return Mode::empirical;
  if (text == "both") return Mode::both;
  detail::fail("mode must be exact, empirical or both; got \"" + std::string(text) + "\"");
}

namespace detail {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& what) {
  const auto t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  require(res.ec == std::errc() && res.ptr == t.data() + t.size() && !t.empty(),
          what + ": expected a number, got \"" + t + "\"");
  return v;
}

inline std::vector<double> parse_double_list(std::string_view text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss{std::string(text)};
  for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_double(item, what));
  require(!out.empty(), what + ": expected a comma-separated list");
  return out;
}

}  // namespace detail

// One experiment, as read from a flat "key = value" file.
struct ExperimentConfig {
  std::string model = "model1";
  std::optional<double> p;
  std::optional<double> q;
  std::vector<double> link_probs;
  std::string code = "hamming(3)";
  std::uint64_t n_trials = 0;
  std::uint64_t master_seed = 1;
  std::optional<double> xi;
  std::optional<double> eps_prime;
  double eps = 0.01;
  Mode mode = Mode::exact;
  std::string output_path;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

  [[nodiscard]] SourceModel source_model() const {
    auto need = [&](const std::optional<double>& v, const char* key) {
      detail::require(v.has_value(), model + " needs \"" + key + "\"");
      return *v;
    };
    if (model == "model1") return Model1Params(need(p, "p"));
    if (model == "model2") return Model2Params(need(p, "p"), need(q, "q"));
    if (model == "model3") {
      detail::require(!link_probs.empty(), "model3 needs \"link_probs\"");
      return Model3Params(link_probs);
    }
    if (model == "model4") return Model4Params(need(p, "p"), need(q, "q"));
    detail::fail("model must be model1, model2, model3 or model4; got \"" + model + "\"");
  }

  [[nodiscard]] bool uses_regular_subsets() const { return model == "model2" || model == "model4"; }

  /// Extraction parameters with documented defaults: xi = 0.05 and eps'
  /// 0.01 above its lower bound.
  [[nodiscard]] ExtractionConfig extraction() const {
    ExtractionConfig cfg;
    cfg.eps = eps;
    cfg.xi = xi.value_or(0.05);
    const double bound = model == "model4" ? 2 * cfg.xi + eps : cfg.xi + eps;
    cfg.eps_prime = eps_prime.value_or(bound + 0.01);
    return cfg;
  }

  /// Copy with every default that affects results written out, so the echo replays exactly.
  [[nodiscard]] ExperimentConfig resolved() const {
    ExperimentConfig out = *this;
    if (uses_regular_subsets()) {
      const auto cfg = extraction();
      out.xi = cfg.xi;
      out.eps_prime = cfg.eps_prime;
    }
    return out;
  }

  void validate() const {
    const auto m = source_model();
    validate_extraction(m, extraction());
    (void)parse_code_spec(code);
    if (mode != Mode::exact) detail::require(n_trials >= 1, "empirical mode needs trials >= 1");
  }

  [[nodiscard]] std::string serialize() const {
    std::ostringstream out;
    out << "model = " << model << '\n';
    if (p) out << "p = " << detail::format_double(*p) << '\n';
    if (q) out << "q = " << detail::format_double(*q) << '\n';
    if (!link_probs.empty()) {
      out << "link_probs = ";
      for (std::size_t i = 0; i < link_probs.size(); ++i) {
        out << (i ? "," : "") << detail::format_double(link_probs[i]);
      }
      out << '\n';
    }
    out << "code = " << code << '\n';
    out << "trials = " << n_trials << '\n';
    out << "seed = " << master_seed << '\n';
    if (xi) out << "xi = " << detail::format_double(*xi) << '\n';
    if (eps_prime) out << "eps_prime = " << detail::format_double(*eps_prime) << '\n';
    out << "eps = " << detail::format_double(eps) << '\n';
    out << "mode = " << to_string(mode) << '\n';
    if (!output_path.empty()) out << "out = " << output_path << '\n';
    return out.str();
  }

  /// Applies one "key = value" assignment.
  void set(const std::string& key, const std::string& value) {
    if (key == "model") {
      model = value;
    } else if (key == "p") {
      p = detail::parse_double(value, key);
    } else if (key == "q") {
      q = detail::parse_double(value, key);
    } else if (key == "link_probs") {
      link_probs = detail::parse_double_list(value, key);
    } else if (key == "code") {
      code = value;
    } else if (key == "trials") {
      n_trials = detail::parse_uint(value, key);
    } else if (key == "seed") {
      master_seed = detail::parse_uint(value, key);
    } else if (key == "xi") {
      xi = detail::parse_double(value, key);
    } else if (key == "eps_prime") {
      eps_prime = detail::parse_double(value, key);
    } else if (key == "eps") {
      eps = detail::parse_double(value, key);
    } else if (key == "mode") {
      mode = parse_mode(value);
    } else if (key == "out") {
      output_path = value;
    } else {
      detail::fail("unknown config key \"" + key + "\"");
    }
  }

  static ExperimentConfig parse(std::string_view text) {
    ExperimentConfig cfg;
    std::istringstream in{std::string(text)};
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto t = detail::trim(line);
      if (t.empty() || t.front() == '[') continue;
      const auto eq = t.find('=');
      detail::require(eq != std::string::npos, "config line " + std::to_string(line_no) + ": expected key = value");
      try {
        cfg.set(detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
      } catch (const InvalidArgument& e) {
        detail::fail("config line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    return cfg;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    detail::require(static_cast<bool>(in), "cannot read config file \"" + path + "\"");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }
};

// --- reports -------------------------------------------------------------------

namespace detail {

class ReportWriter {
 public:
  void section(const std::string& name) { out_ << '[' << name << "]\n"; }
  void field(const std::string& key, const std::string& value) { out_ << key << " = " << value << '\n'; }
  void field(const std::string& key, double value) { field(key, format_double(value)); }
  void field(const std::string& key, std::uint64_t value) { field(key, std::to_string(value)); }
  void field(const std::string& key, std::size_t value, int) { field(key, std::to_string(value)); }
  void field(const std::string& key, bool value) { field(key, std::string(value ? "true" : "false")); }
  void field(const std::string& key, const char* value) { field(key, std::string(value)); }
  template <class T>
  void optional(const std::string& key, const std::optional<T>& value) {
    if (value) field(key, *value);
  }
  void raw(const std::string& text) { out_ << text; }
  [[nodiscard]] std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

}  // namespace detail

/// Prefix of the timing line; everything else in a report is deterministic.
inline constexpr std::string_view kDurationKey = "duration_seconds = ";

struct RunReport {
  ExperimentConfig config;
  CriteriaReport criteria;
  double code_rate = 0.0;
  double duration_seconds = 0.0;

  [[nodiscard]] std::string to_text() const {
    detail::ReportWriter w;
    w.raw("# sklab run report, format " + std::to_string(kReportFormatVersion) + "\n");
    w.section("config");
    w.raw(config.serialize());
    w.section("code");
    w.field("name", criteria.code);
    w.field("n", static_cast<std::uint64_t>(criteria.n));
    w.field("m", static_cast<std::uint64_t>(criteria.m));
    w.field("rate", code_rate);
    w.section("criteria");
    w.field("key_range", criteria.key_range);
    w.field("key_terminal", static_cast<std::uint64_t>(criteria.key_terminal));
    w.field("log_key_range_bits", criteria.log_key_range_bits);
    w.field("nominal_rate", criteria.nominal_rate);
    w.field("capacity_bits_per_symbol", criteria.capacity_bits_per_symbol);
    w.optional("mismatch_exact", criteria.mismatch_exact);
    w.optional("reconstruction_error_exact", criteria.reconstruction_error_exact);
    w.optional("leakage_bits", criteria.leakage_bits);
    w.optional("key_entropy_bits", criteria.key_entropy_bits);
    w.optional("fallback_prob_exact", criteria.fallback_prob_exact);
    w.optional("rate_bits_per_symbol", criteria.rate_bits_per_symbol);
    w.optional("capacity_gap", criteria.capacity_gap);
    w.optional("trials", criteria.trials);
    w.optional("mismatch_empirical", criteria.mismatch_empirical);
    w.optional("mismatch_halfwidth_95", criteria.mismatch_halfwidth);
    w.optional("reconstruction_error_empirical", criteria.reconstruction_error_empirical);
    w.optional("fallback_freq", criteria.fallback_freq);
    w.optional("key_entropy_plugin_bits", criteria.key_entropy_plugin_bits);
    w.optional("chi_square", criteria.chi_square);
    w.optional("chi_square_critical_99", criteria.chi_square_critical);
    w.optional("rate_clause_applicable", criteria.rate_clause_applicable);
    w.optional("rate_target", criteria.rate_target);
    w.optional("rate_floor_discrepancy", criteria.rate_floor_discrepancy);
    std::string flags;
    for (const auto& f : criteria.flags) flags += (flags.empty() ? "" : ",") + f;
    w.field("flags", flags);
    w.section("checks");
    for (const auto& [name, ok] : criteria.checks) w.field(name, std::string(ok ? "pass" : "fail"));
    w.section("run");
    w.field("artifact_version", kArtifactVersion);
    w.raw(std::string(kDurationKey) + detail::format_double(duration_seconds) + "\n");
    return w.str();
  }

  /// One tab-separated row for sweep tables.
  [[nodiscard]] std::string table_row() const {
    auto opt = [](const std::optional<double>& v) { return v ? detail::format_double(*v) : std::string("NA"); };
    std::ostringstream out;
    out << config.model << '\t' << criteria.code << '\t' << criteria.n << '\t' << criteria.m << '\t'
        << criteria.key_range << '\t' << opt(criteria.mismatch_exact) << '\t' << opt(criteria.mismatch_empirical)
        << '\t' << opt(criteria.leakage_bits) << '\t' << opt(criteria.key_entropy_bits) << '\t'
        << detail::format_double(criteria.capacity_bits_per_symbol) << '\t' << opt(criteria.capacity_gap) << '\t'
        << (criteria.all_checks_pass() ? "pass" : "fail") << '\n';
    return out.str();
  }

  static std::string table_header() {
    return "model\tcode\tn\tm\tkey_range\tmismatch_exact\tmismatch_empirical\tleakage_bits\tkey_entropy_bits\t"
           "capacity\tcapacity_gap\tchecks\n";
  }
};

/// Drops the timing line so two reports can be compared byte for byte.
inline std::string strip_timing(const std::string& report) {
  std::istringstream in(report);
  std::string out;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(kDurationKey, 0) == 0) continue;
    out += line;
    out += '\n';
  }
  return out;
}

/// Executes one experiment. Throws InvalidArgument/ConstructionError for bad
/// configs and FeasibilityError when exact mode exceeds its caps.
inline RunReport run_experiment(const ExperimentConfig& raw_config, std::size_t workers = 1) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig config = raw_config.resolved();
  config.validate();
  const auto model = config.source_model();
  const auto cfg = config.extraction();
  const LinearCode code = make_code(config.code);
  if (config.mode != Mode::empirical) {
    if (auto why = exact_infeasibility(model, code)) throw FeasibilityError(*why);
  }
  RunReport report;
  report.config = config;
  report.code_rate = code.rate();
  report.criteria = empty_report(model, code, cfg);
  if (config.mode != Mode::empirical) {
    apply_exact(report.criteria, model, code, exact_outcome_distribution(model, code, cfg, workers));
  }
  if (config.mode != Mode::exact) {
    const auto protocol = make_protocol(code, model, cfg);
    apply_empirical(report.criteria, run_trials(protocol, config.n_trials, config.master_seed, workers));
  }
  report.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

/// Capacity, and when a code is given its key rate and the gap.
inline std::string capacity_table(const SourceModel& model, const std::optional<std::string>& code_spec) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  out << "model\t" << model_name(model) << '\n';
  if (const auto* m3 = std::get_if<Model3Params>(&model)) out << "worst_link\t" << worst_link(*m3) << '\n';
  const double cap = capacity(model);
  out << "capacity_bits_per_symbol\t" << cap << '\n';
  if (code_spec) {
    const auto code = make_code(*code_spec);
    out << "code\t" << code.name() << '\n';
    out << "code_rate\t" << code.rate() << '\n';
    out << "gap\t" << cap - code.rate() << '\n';
  }
  return out.str();
}

/// Code metadata with its exact BSC(p) error rate when enumerable.
inline std::string code_info_table(const std::string& code_spec, double p) {
  detail::require(p > 0.0 && p < 0.5, "p must lie in (0, 1/2)");
  const auto code = make_code(code_spec);
  const double channel_capacity = 1.0 - binary_entropy(p);
  const double key_rate = std::log2(static_cast<double>(code.codeword_count())) / static_cast<double>(code.length());
  std::ostringstream out;
  out << std::setprecision(10);
  out << "code\t" << code.name() << '\n';
  out << "n\t" << code.length() << '\n';
  out << "m\t" << code.parity_checks() << '\n';
  out << "rate\t" << code.rate() << '\n';
  if (code.length() <= kMaxEnumerationLength) {
    out << "error_prob\t" << exact_bsc_error_prob(code, p) << '\n';
  } else {
    out << "error_prob\tNA\t# n > " << kMaxEnumerationLength << ": exact enumeration skipped\n";
  }
  out << "capacity\t" << channel_capacity << '\n';
  out << "channel_gap\t" << channel_capacity - code.rate() << '\n';
  out << "sk_rate_gap\t" << channel_capacity - key_rate << '\n';
  return out.str();
}

}  // namespace sklab
