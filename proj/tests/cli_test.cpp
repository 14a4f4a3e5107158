// Exercises the installed binary end to end: exit codes, output files,
// manifest embedding and byte-stable reruns.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "herald/data_io.hpp"

namespace {

namespace fs = std::filesystem;

std::string cli_path() { return HERALD_CLI_PATH; }

int run(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("herald_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
        data_ = (dir_ / "fixture.json").string();
        herald::save_hypergraph_json(
            data_, herald::make_fixture(herald::FixtureKind::separable_node_task, 0));
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path dir_;
    std::string data_;
};

TEST_F(CliTest, TrainWritesReportsAndAggregate) {
    const std::string out = (dir_ / "out").string();
    const int rc = run("train --data " + data_ +
                       " --herald on --hidden 8 --herald-hidden 4 --epochs 30"
                       " --patience 30 --seeds 0..1 --out-dir " + out);
    EXPECT_EQ(rc, 0);
    EXPECT_TRUE(fs::exists(fs::path(out) / "report_seed0.json"));
    EXPECT_TRUE(fs::exists(fs::path(out) / "report_seed1.json"));
    EXPECT_TRUE(fs::exists(fs::path(out) / "metrics_seed0.csv"));
    EXPECT_TRUE(fs::exists(fs::path(out) / "checkpoint_seed1.json"));
    EXPECT_TRUE(fs::exists(fs::path(out) / "aggregate.json"));

    const auto report = nlohmann::json::parse(slurp(fs::path(out) / "report_seed0.json"));
    ASSERT_TRUE(report.contains("manifest"));
    EXPECT_EQ(report["manifest"]["seed"].get<int>(), 0);
    EXPECT_FALSE(report["manifest"]["dataset_checksum"].get<std::string>().empty());
    const auto aggregate = nlohmann::json::parse(slurp(fs::path(out) / "aggregate.json"));
    EXPECT_EQ(aggregate["test_accuracies"].size(), 2u);
    // metrics CSV leads with the stable manifest
    const std::string csv = slurp(fs::path(out) / "metrics_seed0.csv");
    EXPECT_EQ(csv.rfind("# manifest: ", 0), 0u);
}

TEST_F(CliTest, RerunProducesByteIdenticalMetricsCsv) {
    const std::string args = "train --data " + data_ +
                             " --herald on --hidden 8 --herald-hidden 4 --epochs 20"
                             " --patience 20 --seeds 3 ";
    const std::string out1 = (dir_ / "a").string(), out2 = (dir_ / "b").string();
    ASSERT_EQ(run(args + "--out-dir " + out1), 0);
    ASSERT_EQ(run(args + "--out-dir " + out2), 0);
    EXPECT_EQ(slurp(fs::path(out1) / "metrics_seed3.csv"),
              slurp(fs::path(out2) / "metrics_seed3.csv"));
}

TEST_F(CliTest, ExitCodesAreAStableContract) {
    // 2: config error (unknown flag value)
    EXPECT_EQ(run("train --data " + data_ + " --mix wobble --epochs 1"), 2);
    // 2: unparseable flag
    EXPECT_EQ(run("train --data " + data_ + " --no-such-flag"), 2);
    // 3: data error
    EXPECT_EQ(run("train --data " + (dir_ / "absent.json").string() + " --epochs 1"), 3);
    // 4: numeric divergence
    EXPECT_EQ(run("train --data " + data_ +
                  " --herald off --hidden 8 --lr 1e200 --epochs 30 --patience 30"
                  " --reg-weight 0 --out-dir " + (dir_ / "diverge").string()),
              4);
}

TEST_F(CliTest, GradcheckPassesAndCatchesInjectedDefect) {
    EXPECT_EQ(run("gradcheck --seed 1"), 0);
    EXPECT_EQ(run("gradcheck --seed 1 --op soft_incidence"), 0);
    EXPECT_EQ(run("gradcheck --seed 1 --inject-backward-defect"), 5);
}

TEST_F(CliTest, ConfigFileFlagsPrecedence) {
    const fs::path cfg = dir_ / "config.json";
    std::ofstream(cfg) << R"({"hidden": 8, "herald_hidden": 4, "epochs": 15,
                              "patience": 15, "herald": "off"})";
    const std::string out = (dir_ / "cfgout").string();
    // --herald on must beat the config file's "off"
    const int rc = run("train --data " + data_ + " --config " + cfg.string() +
                       " --herald on --seeds 0 --out-dir " + out);
    EXPECT_EQ(rc, 0);
    const auto report = nlohmann::json::parse(slurp(fs::path(out) / "report_seed0.json"));
    EXPECT_EQ(report["manifest"]["config"]["herald"].get<std::string>(), "on");
    EXPECT_EQ(report["manifest"]["config"]["epochs"].get<int>(), 15);
    EXPECT_GT(report["herald_parameter_count"].get<int>(), 0);
}

TEST_F(CliTest, FastHeraldReducedParameterCountInManifest) {
    const std::string out_fast = (dir_ / "fast").string();
    const std::string out_layered = (dir_ / "layered").string();
    const std::string common = "train --data " + data_ +
                               " --herald on --hidden 8 --herald-hidden 4 --epochs 10"
                               " --patience 10 --seeds 0 --out-dir ";
    ASSERT_EQ(run(common + out_fast + " --fast-herald"), 0);
    ASSERT_EQ(run(common + out_layered), 0);
    const auto fast = nlohmann::json::parse(slurp(fs::path(out_fast) / "report_seed0.json"));
    const auto layered =
        nlohmann::json::parse(slurp(fs::path(out_layered) / "report_seed0.json"));
    EXPECT_LT(fast["herald_parameter_count"].get<int>(),
              layered["herald_parameter_count"].get<int>());
}

TEST_F(CliTest, CvOnToyTuDirectory) {
    const std::string tu = (dir_ / "toytu").string();
    ASSERT_EQ(run("fixture --tu-out " + tu + " --seed 0"), 0);
    const std::string out = (dir_ / "cv").string();
    const int rc = run("cv --data " + tu +
                       " --herald on --hidden 6 --herald-hidden 3 --epochs 3"
                       " --patience 3 --folds 2 --seed 0 --out-dir " + out);
    EXPECT_EQ(rc, 0);
    const auto report = nlohmann::json::parse(slurp(fs::path(out) / "cv_report.json"));
    EXPECT_EQ(report["report"]["fold_accuracies"].size(), 2u);
    EXPECT_TRUE(fs::exists(fs::path(out) / "cv_folds.csv"));
}

TEST_F(CliTest, InspectDumpsOperatorsAndSpectra) {
    const std::string out = (dir_ / "trained").string();
    ASSERT_EQ(run("train --data " + data_ +
                  " --herald on --hidden 8 --herald-hidden 4 --epochs 10 --patience 10"
                  " --seeds 0 --out-dir " + out),
              0);
    const std::string dump = (dir_ / "dump").string();
    const int rc = run("inspect --checkpoint " + out + "/checkpoint_seed0.json --data " +
                       data_ + " --out-dir " + dump);
    EXPECT_EQ(rc, 0);
    EXPECT_TRUE(fs::exists(fs::path(dump) / "n.csv"));
    EXPECT_TRUE(fs::exists(fs::path(dump) / "n_res_0.csv"));
    EXPECT_TRUE(fs::exists(fs::path(dump) / "n_hat_1.csv"));
    EXPECT_TRUE(fs::exists(fs::path(dump) / "h_tilde_hist_0.csv"));
    EXPECT_TRUE(fs::exists(fs::path(dump) / "spectrum_0.csv"));
    const auto summary = nlohmann::json::parse(slurp(fs::path(dump) / "summary.json"));
    ASSERT_EQ(summary["herald_layers"].size(), 2u);
    // spectra of the mixed operator stay in the unit interval
    for (const auto& layer : summary["herald_layers"]) {
        EXPECT_GE(layer["n_hat_spectrum"]["min"].get<double>(), -1e-9);
        EXPECT_LE(layer["n_hat_spectrum"]["max"].get<double>(), 1.0 + 1e-9);
    }

    // mismatched dataset (wrong feature width) is a config error
    const std::string other = (dir_ / "blobs.json").string();
    herald::save_hypergraph_json(
        other, herald::make_fixture(herald::FixtureKind::two_blobs, 0));
    EXPECT_EQ(run("inspect --checkpoint " + out + "/checkpoint_seed0.json --data " +
                  other + " --out-dir " + dump),
              2);
}

TEST_F(CliTest, InspectZeroMixCheckpointMatchesStaticOperator) {
    const std::string out = (dir_ / "zero").string();
    ASSERT_EQ(run("train --data " + data_ +
                  " --herald on --mix const:0 --hidden 8 --herald-hidden 4 --epochs 5"
                  " --patience 5 --seeds 0 --out-dir " + out),
              0);
    const std::string dump = (dir_ / "zerodump").string();
    ASSERT_EQ(run("inspect --checkpoint " + out + "/checkpoint_seed0.json --data " +
                  data_ + " --out-dir " + dump),
              0);
    // hatN dumped by inspect equals N bit for bit at a == 0
    EXPECT_EQ(slurp(fs::path(dump) / "n_hat_0.csv"), slurp(fs::path(dump) / "n.csv"));
    // soft incidence entries are strictly positive
    const auto summary = nlohmann::json::parse(slurp(fs::path(dump) / "summary.json"));
    EXPECT_EQ(summary["herald_layers"].size(), 2u);
    std::ifstream ht(fs::path(dump) / "h_tilde_0.csv");
    std::string line;
    while (std::getline(ht, line)) {
        std::istringstream is(line);
        std::string cell;
        while (std::getline(is, cell, ',')) EXPECT_GT(std::stod(cell), 0.0);
    }
}

}  // namespace
