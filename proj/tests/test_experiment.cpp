#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "sklab/experiment.hpp"

using namespace sklab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Exit status of the CLI with the given arguments; output is discarded.
int cli(const std::string& args) {
  const std::string cmd = std::string(SKLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path temp_file(const std::string& name, const std::string& content = {}) {
  const auto path = fs::temp_directory_path() / ("sklab_" + name);
  std::ofstream(path, std::ios::binary) << content;
  return path;
}

}  // namespace

TEST(Config, ParsesCommentsAndBlanks) {
  const auto cfg = ExperimentConfig::parse(
      "# header\n\nmodel = model2  # trailing\np=0.1\n q = 0.3\ncode = random_linear(10,5,7)\nmode = both\n");
  EXPECT_EQ(cfg.model, "model2");
  EXPECT_EQ(*cfg.p, 0.1);
  EXPECT_EQ(*cfg.q, 0.3);
  EXPECT_EQ(cfg.code, "random_linear(10,5,7)");
  EXPECT_EQ(cfg.mode, Mode::both);
}

TEST(Config, RoundTrip) {
  ExperimentConfig cfg;
  cfg.model = "model3";
  cfg.link_probs = {0.1, 0.030000000000000002, 1.0 / 3.0 * 0.3};
  cfg.code = "hamming(4)";
  cfg.n_trials = 12345;
  cfg.master_seed = 18446744073709551615ull;
  cfg.eps = 0.011;
  cfg.mode = Mode::empirical;
  cfg.output_path = "/tmp/out.txt";
  EXPECT_EQ(ExperimentConfig::parse(cfg.serialize()), cfg);

  ExperimentConfig m4;
  m4.model = "model4";
  m4.p = 0.05;
  m4.q = 0.2;
  m4.xi = 0.15;
  m4.eps_prime = 0.35;
  EXPECT_EQ(ExperimentConfig::parse(m4.serialize()), m4);
  EXPECT_EQ(ExperimentConfig::parse(m4.resolved().serialize()), m4.resolved());
}

TEST(Config, Errors) {
  EXPECT_THROW(ExperimentConfig::parse("colour = blue\n"), InvalidArgument);
  EXPECT_THROW(ExperimentConfig::parse("p = abc\n"), InvalidArgument);
  EXPECT_THROW(ExperimentConfig::parse("just words\n"), InvalidArgument);
  EXPECT_THROW(ExperimentConfig::parse("mode = fast\n"), InvalidArgument);
  EXPECT_THROW(ExperimentConfig::parse("model = model2\np = 0.1\n").validate(), InvalidArgument);
  EXPECT_THROW(ExperimentConfig::parse("model = model9\np = 0.1\n").validate(), InvalidArgument);
  EXPECT_THROW(ExperimentConfig::parse("model = model1\np = 0.1\nmode = empirical\n").validate(), InvalidArgument);
}

TEST(Config, Model2SlackRuleCited) {
  auto cfg = ExperimentConfig::parse("model = model2\np = 0.1\nq = 0.3\nxi = 0.1\neps_prime = 0.1\n");
  try {
    cfg.validate();
    FAIL() << "expected rejection";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("eps' > xi + eps"), std::string::npos);
  }
}

TEST(Config, DefaultsAreResolvedIntoTheEcho) {
  const auto cfg = ExperimentConfig::parse("model = model2\np = 0.1\nq = 0.3\ncode = random_linear(10,5,7)\n");
  const auto r = cfg.resolved();
  EXPECT_EQ(*r.xi, 0.05);
  EXPECT_NEAR(*r.eps_prime, 0.07, 1e-15);
}

TEST(Run, Model1ExactReport) {
  const auto cfg = ExperimentConfig::parse("model = model1\np = 0.05\ncode = hamming(3)\n");
  const auto report = run_experiment(cfg);
  EXPECT_NEAR(*report.criteria.mismatch_exact, 0.04438, 1e-5);
  EXPECT_NEAR(*report.criteria.leakage_bits, 0.0, 1e-12);
  EXPECT_TRUE(report.criteria.all_checks_pass());
  const auto text = report.to_text();
  EXPECT_EQ(text.rfind("# sklab run report, format 1\n", 0), 0u);
  EXPECT_NE(text.find("[config]\nmodel = model1\n"), std::string::npos);
  EXPECT_NE(text.find("rate = 0.5714285714285714\n"), std::string::npos);
  EXPECT_NE(text.find("key_uniform = pass"), std::string::npos);
}

TEST(Run, EchoReplaysExactly) {
  const auto cfg = ExperimentConfig::parse(
      "model = model4\np = 0.05\nq = 0.2\ncode = random_linear(8,4,3)\ntrials = 5000\nseed = 9\nxi = 0.15\n"
      "eps_prime = 0.35\nmode = both\n");
  const auto first = run_experiment(cfg, 2);
  const auto text = first.to_text();
  const auto begin = text.find("[config]\n") + 9;
  const auto echo = text.substr(begin, text.find("[code]") - begin);
  const auto replay = run_experiment(ExperimentConfig::parse(echo), 3);
  EXPECT_EQ(strip_timing(replay.to_text()), strip_timing(text));
}

TEST(Run, InfeasibleExactNamesCap) {
  const auto cfg = ExperimentConfig::parse("model = model1\np = 0.05\ncode = hamming(4)\n");
  try {
    (void)run_experiment(cfg);
    FAIL() << "expected infeasibility";
  } catch (const FeasibilityError& e) {
    EXPECT_NE(std::string(e.what()).find("n <= 10"), std::string::npos) << e.what();
  }
}

TEST(Run, StripTimingRemovesOnlyDuration) {
  const std::string text = "a = 1\nduration_seconds = 0.5\nb = 2\n";
  EXPECT_EQ(strip_timing(text), "a = 1\nb = 2\n");
}

TEST(Tables, CapacityAndCodeInfo) {
  EXPECT_NE(capacity_table(Model1Params(0.11), std::nullopt).find("0.500084"), std::string::npos);
  EXPECT_NE(capacity_table(Model2Params(0.1, 0.3), std::nullopt).find("0.4558"), std::string::npos);
  EXPECT_NE(capacity_table(Model3Params({0.03, 0.05}), std::nullopt).find("0.7136"), std::string::npos);
  const auto gap = capacity_table(Model1Params(0.1), std::string("repetition(3)"));
  EXPECT_NE(gap.find("gap\t0.197"), std::string::npos) << gap;
  const auto info = code_info_table("repetition(5)", 0.1);
  EXPECT_NE(info.find("rate\t0.2\n"), std::string::npos) << info;
  EXPECT_NE(info.find("error_prob\t0.00856\n"), std::string::npos) << info;
  EXPECT_NE(code_info_table("hamming(5)", 0.05).find("error_prob\tNA"), std::string::npos);
  EXPECT_EQ(code_info_table("random_linear(10,5,3)", 0.1), code_info_table("random_linear(10,5,3)", 0.1));
}

TEST(Cli, ExitCodes) {
  const auto good = temp_file("good.cfg", "model = model1\np = 0.05\ncode = hamming(3)\n");
  const auto bad = temp_file("bad.cfg", "model = model2\np = 0.1\nq = 0.3\nxi = 0.1\neps_prime = 0.1\n");
  const auto unknown = temp_file("unknown.cfg", "flavour = sweet\n");
  const auto infeasible = temp_file("infeasible.cfg", "model = model1\np = 0.05\ncode = hamming(5)\n");
  const auto deficient = temp_file("deficient.txt", "3 2\n110\n110\n");
  const auto file_code = temp_file("file_code.cfg", "model = model1\np = 0.05\ncode = from_file(" + deficient.string() + ")\n");
  EXPECT_EQ(cli("run --config " + good.string()), 0);
  EXPECT_EQ(cli("run --config " + bad.string()), 2);
  EXPECT_EQ(cli("run --config " + unknown.string()), 2);
  EXPECT_EQ(cli("run --config " + infeasible.string()), 3);
  EXPECT_EQ(cli("run --config " + infeasible.string() + " --mode empirical --trials 100"), 0);
  EXPECT_EQ(cli("run --config " + file_code.string()), 2);
  EXPECT_EQ(cli("run --config /nonexistent.cfg"), 2);
  EXPECT_EQ(cli("capacity --model model2 --p 0.1 --q 0.3"), 0);
  EXPECT_EQ(cli("capacity --model model1 --p 0.7"), 2);
  EXPECT_EQ(cli("code-info --code 'hamming(3)' --p 0.05"), 0);
  EXPECT_EQ(cli("code-info --code 'hamming(1)'"), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
}

// Same seed on 1, 2 and 8 workers: identical bytes apart from the timing line.
TEST(Cli, ReportsIdenticalAcrossWorkers) {
  for (const char* name : {"model1_hamming3.cfg", "model2_random10.cfg", "model3_chain.cfg", "model4_helper.cfg"}) {
    const fs::path config = fs::path(SKLAB_CONFIG_DIR) / name;
    std::string reference;
    for (int workers : {1, 2, 8}) {
      const auto out = fs::temp_directory_path() / "sklab_report.txt";
      ASSERT_EQ(cli("run --config " + config.string() + " --trials 20000 --workers " + std::to_string(workers) +
                    " --out " + out.string()),
                0);
      const auto text = strip_timing(slurp(out));
      if (reference.empty()) {
        reference = text;
      } else {
        EXPECT_EQ(text, reference) << name << " workers=" << workers;
      }
    }
    EXPECT_NE(reference.find("trials = 20000"), std::string::npos);
  }
}

TEST(Cli, SeedOverrideChangesEmpiricalOnly) {
  const fs::path config = fs::path(SKLAB_CONFIG_DIR) / "model1_hamming3.cfg";
  const auto a = fs::temp_directory_path() / "sklab_seed_a.txt";
  const auto b = fs::temp_directory_path() / "sklab_seed_b.txt";
  ASSERT_EQ(cli("run --config " + config.string() + " --trials 5000 --seed 1 --out " + a.string()), 0);
  ASSERT_EQ(cli("run --config " + config.string() + " --trials 5000 --seed 2 --out " + b.string()), 0);
  EXPECT_NE(strip_timing(slurp(a)), strip_timing(slurp(b)));
}

TEST(Cli, TableRows) {
  const auto table = fs::temp_directory_path() / "sklab_table.tsv";
  fs::remove(table);
  const fs::path config = fs::path(SKLAB_CONFIG_DIR) / "model3_chain.cfg";
  ASSERT_EQ(cli("run --config " + config.string() + " --mode exact --table " + table.string()), 0);
  ASSERT_EQ(cli("run --config " + config.string() + " --mode exact --table " + table.string()), 0);
  const auto text = slurp(table);
  EXPECT_EQ(text.rfind("model\tcode\t", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}
