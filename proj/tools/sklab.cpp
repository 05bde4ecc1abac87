// Command-line front end: run, capacity, code-info, verify.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sklab/acceptance.hpp"
#include "sklab/sklab.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitFeasibility = 3;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw sklab::InvalidArgument("cannot write \"" + path + "\"");
  out << text;
}

void append_table_row(const std::string& path, const sklab::RunReport& report) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw sklab::InvalidArgument("cannot write \"" + path + "\"");
  if (fresh) out << sklab::RunReport::table_header();
  out << report.table_row();
}

sklab::SourceModel model_from_flags(const std::string& name, std::optional<double> p, std::optional<double> q,
                                    const std::vector<double>& links) {
  sklab::ExperimentConfig cfg;
  cfg.model = name;
  cfg.p = p;
  cfg.q = q;
  cfg.link_probs = links;
  return cfg.source_model();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secret-key agreement from correlated binary sources"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<std::string> mode;
  std::optional<std::string> out_path;
  std::string table_path;
  std::size_t workers = 1;

  auto* run = app.add_subcommand("run", "Run one experiment and write its report");
  run->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--trials", trials, "Override the number of Monte-Carlo trials");
  run->add_option("--mode", mode, "exact, empirical or both")->check(CLI::IsMember({"exact", "empirical", "both"}));
  run->add_option("--out", out_path, "Report path; standard output when absent");
  run->add_option("--table", table_path, "Append a tab-separated summary row to this file");
  run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  std::string model_name = "model1";
  std::optional<double> p;
  std::optional<double> q;
  std::vector<double> links;
  std::optional<std::string> code_spec;
  auto* cap = app.add_subcommand("capacity", "Print the key capacity of a source model");
  cap->add_option("--model", model_name, "model1, model2, model3 or model4");
  cap->add_option("--p", p, "Crossover probability");
  cap->add_option("--q", q, "Second-stage crossover (models 2 and 4)");
  cap->add_option("--links", links, "Link crossovers for model 3")->delimiter(',');
  cap->add_option("--code", code_spec, "Code specifier; adds its rate and the gap");

  std::string info_code;
  double info_p = 0.05;
  auto* info = app.add_subcommand("code-info", "Print code metadata and its exact BSC error rate");
  info->add_option("--code", info_code, "Code specifier")->required();
  info->add_option("--p", info_p, "BSC crossover probability");

  std::size_t verify_workers = 1;
  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
  verify->add_option("--workers", verify_workers, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) {
      auto cfg = sklab::ExperimentConfig::load(config_path);
      if (seed) cfg.master_seed = *seed;
      if (trials) cfg.n_trials = *trials;
      if (mode) cfg.mode = sklab::parse_mode(*mode);
      if (out_path) cfg.output_path = *out_path;
      const auto report = sklab::run_experiment(cfg, workers);
      const auto text = report.to_text();
      if (cfg.output_path.empty()) {
        std::cout << text;
      } else {
        write_text(cfg.output_path, text);
      }
      if (!table_path.empty()) append_table_row(table_path, report);
    } else if (*cap) {
      std::cout << sklab::capacity_table(model_from_flags(model_name, p, q, links), code_spec);
    } else if (*info) {
      std::cout << sklab::code_info_table(info_code, info_p);
    } else if (*verify) {
      return sklab::acceptance::run_all(std::cout, verify_workers) ? kExitOk : 1;
    }
  } catch (const sklab::FeasibilityError& e) {
    std::cerr << "sklab: infeasible: " << e.what() << '\n';
    return kExitFeasibility;
  } catch (const sklab::InvalidArgument& e) {
    std::cerr << "sklab: invalid configuration: " << e.what() << '\n';
    return kExitConfig;
  } catch (const sklab::ConstructionError& e) {
    std::cerr << "sklab: cannot construct code: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
