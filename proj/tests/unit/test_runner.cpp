#include "bsdelab/errors.hpp"
#include "bsdelab/report.hpp"
#include "bsdelab/runner.hpp"
#include "bsdelab/suites.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace bsdelab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("bsdelab_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int cli(const std::string& args) {
    const std::string cmd = std::string(BSDELAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_error(const std::string& text) {
    try {
        ExperimentConfig::parse(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Config, FieldLevelDiagnostics) {
    EXPECT_NE(config_error(R"({"tree": {"n_steps": -3}})").find("tree.n_steps"), std::string::npos);
    EXPECT_NE(config_error(R"({"experiment": "dance"})").find("experiment"), std::string::npos);
    EXPECT_NE(config_error(R"({"seed": "seven"})").find("seed"), std::string::npos);
    EXPECT_NE(config_error(R"({"counterexample": {"eps": -0.1}})").find("counterexample.eps"), std::string::npos);
    EXPECT_FALSE(config_error("{ not json").empty());
    EXPECT_TRUE(config_error("{}").empty());
}

TEST(Config, RoundTripAndHash) {
    ExperimentConfig c;
    c.experiment = ExperimentKind::reflect;
    c.tree.n_steps = 5;
    c.seed = 123;
    const auto back = ExperimentConfig::from_json(c.to_json());
    EXPECT_EQ(back.canonical(), c.canonical());
    EXPECT_EQ(back.hash(), c.hash());
    ExperimentConfig moved = c;
    moved.output = "elsewhere";
    moved.workers = 4;
    EXPECT_EQ(moved.hash(), c.hash());
    ExperimentConfig reseeded = c;
    reseeded.seed = 124;
    EXPECT_NE(reseeded.hash(), c.hash());
}

TEST(Runner, SolveIsByteIdentical) {
    auto c = ExperimentConfig::parse(slurp(fs::path(BSDELAB_CONFIG_DIR) / "basic.json"));
    const auto a = run(c);
    const auto b = run(c);
    ASSERT_EQ(a.exit_code, 0) << (a.failures.empty() ? "" : a.failures.front());
    ASSERT_EQ(a.artifacts.size(), b.artifacts.size());
    for (std::size_t i = 0; i < a.artifacts.size(); ++i) {
        EXPECT_EQ(a.artifacts[i].name, b.artifacts[i].name);
        EXPECT_EQ(a.artifacts[i].content, b.artifacts[i].content);
    }
    EXPECT_EQ(a.artifacts.back().name, "manifest.json");
}

TEST(Runner, ManifestFeedsBackAsConfig) {
    ExperimentConfig c;
    c.experiment = ExperimentKind::reflect;
    c.tree.n_steps = 3;
    c.instances = 2;
    const auto res = run(c);
    ASSERT_EQ(res.exit_code, 0);
    const auto manifest = nlohmann::json::parse(res.artifacts.back().content);
    EXPECT_EQ(manifest["exit_code"], 0);
    const auto again = ExperimentConfig::parse(res.artifacts.back().content);
    EXPECT_EQ(again.hash(), c.hash());
    const auto res2 = run(again);
    EXPECT_EQ(res2.artifacts.back().content, res.artifacts.back().content);
}

TEST(Runner, TreeSizingIsConfigError) {
    ExperimentConfig c;
    c.experiment = ExperimentKind::solve;
    c.tree.n_steps = 12;
    c.tree.dim = 2;
    c.tree.node_cap = 100;
    const auto res = run(c);
    EXPECT_EQ(res.exit_code, 2);
    EXPECT_FALSE(res.failures.empty());
}

TEST(Runner, PicardAndSnellExperiments) {
    ExperimentConfig c;
    c.tree.n_steps = 3;
    c.instances = 2;
    for (auto kind : {ExperimentKind::picard, ExperimentKind::snell_check}) {
        c.experiment = kind;
        const auto res = run(c);
        EXPECT_EQ(res.exit_code, 0) << experiment_name(kind);
    }
}

TEST(Suites, NamesAndUnknown) {
    EXPECT_EQ(suite_names().size(), 17u);
    EXPECT_THROW(run_suite("nope", SuiteOptions{}), ConfigError);
    for (const auto& spec : shipped_tree_specs()) {
        EXPECT_LE(spec.dim, 2u);
        EXPECT_LE(spec.n_steps, 12u);
        EXPECT_LE(spec.reveals.size(), 2u);
    }
}

TEST(Suites, TreeSuiteIndependentOfWorkers) {
    SuiteOptions a;
    a.size = 0.2;
    SuiteOptions b = a;
    b.workers = 3;
    const auto ra = run_suite("skorokhod", a);
    const auto rb = run_suite("skorokhod", b);
    EXPECT_TRUE(ra.pass());
    EXPECT_EQ(reports_csv({ra}), reports_csv({rb}));
}

TEST(Report, CsvNumbers) {
    EXPECT_EQ(csv_number(0.5), "0.5");
    EXPECT_EQ(csv_number(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(csv_number(std::nan("")), "nan");
    const double x = 0.1 + 0.2;
    EXPECT_EQ(std::stod(csv_number(x)), x);
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch("cli");
    EXPECT_EQ(cli("--help"), 0);
    EXPECT_EQ(cli(""), 2);
    EXPECT_EQ(cli("dance"), 2);
    std::ofstream(dir / "bad.json") << R"({"tree": {"dim": 0}})";
    EXPECT_EQ(cli("solve --config " + (dir / "bad.json").string() + " --out " + (dir / "x").string()), 2);
    std::ofstream(dir / "broken.json") << "{ \"tree\": ";
    EXPECT_EQ(cli("solve --config " + (dir / "broken.json").string() + " --out " + (dir / "x").string()), 2);
    EXPECT_EQ(cli("solve --config /nonexistent.json"), 2);
    EXPECT_EQ(cli("verify --suite tree --seed 7 --out " + (dir / "v").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "v" / "manifest.json"));
    fs::remove_all(dir);
}

TEST(Cli, SolveTwiceByteIdentical) {
    const auto dir = scratch("solve");
    const std::string cfg = std::string(BSDELAB_CONFIG_DIR) + "/basic.json";
    ASSERT_EQ(cli("solve --config " + cfg + " --seed 7 --out " + (dir / "a").string()), 0);
    ASSERT_EQ(cli("solve --config " + cfg + " --seed 7 --out " + (dir / "b").string() + " --workers 2"), 0);
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        const auto name = entry.path().filename();
        if (name == "manifest.json" || name == "summary.json") continue;  // record the output path
        EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / name)) << name;
        ++compared;
    }
    EXPECT_GE(compared, 2u);
    fs::remove_all(dir);
}
