#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "charflux/tools/experiment.hpp"

using namespace charflux;
using namespace charflux::tools;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "charflux_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_exe(const std::string& args) {
    const int status = std::system((std::string(CHARFLUX_EXE) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig small_covariance(const fs::path& out) {
    ExperimentConfig c;
    c.kind = ExperimentKind::rw_covariance;
    c.ns = {100};
    c.replicates = 60;
    c.times = {0.5, 1.0};
    c.base_points = {0.0, 1.0};
    c.checkpoint_every = 25;
    c.out = out;
    return c;
}

}  // namespace

TEST(Cli, ZeroReplicatesRejected) {
    auto c = small_covariance(scratch("zero"));
    c.replicates = 0;
    try {
        validate(c);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "replicates");
    }
    const auto dir = scratch("zero_exe");
    std::ofstream(dir / "c.toml") << "kind = \"rw-covariance\"\nreplicates = 0\n";
    EXPECT_EQ(run_exe((dir / "c.toml").string() + " --out " + (dir / "out").string()), 1);
}

TEST(Cli, ConfigErrorsNameTheField) {
    const auto expect_field = [](const nlohmann::json& doc, const std::string& field) {
        try {
            validate(config_from_json(doc));
            ADD_FAILURE() << "accepted " << doc.dump();
        } catch (const ConfigError& e) {
            EXPECT_EQ(e.field(), field) << e.what();
        }
    };
    expect_field({{"kind", "rw-covariance"}, {"bogus", 1}}, "bogus");
    expect_field({{"kind", "nope"}}, "kind");
    expect_field({{"kind", "rw-covariance"}, {"times", {1.0, 0.5}}}, "times");
    expect_field({{"kind", "rw-scaling"}, {"n", {100, 200}}}, "n");
    expect_field({{"kind", "rw-independence"}, {"base_points", {0.0}}}, "base_points");
    expect_field({{"kind", "rw-covariance"}, {"kernel", {{"p_right", 1.5}}}}, "kernel");
    expect_field({{"kind", "rw-covariance"}, {"law", "binomial_thinned"}}, "n=1600");
    expect_field({{"kind", "rw-covariance"}, {"profile", {{"shape", "wedge"}}}}, "profile.shape");
    expect_field({{"kind", "hopf-lax-map"}, {"t", 1.0}}, "xs");
}

TEST(Cli, TomlAndJsonAgree) {
    const auto toml = toml_to_json(R"(
kind = "rw-covariance"
n = [200, 400]
replicates = 10
times = [0.5, 1.0]
law = "poisson_mixture"
[kernel]
steps = [[-1, 0.25], [2, 0.75]]
[profile]
shape = "linear"
slope = 1.0
variance_ratio = 2.0
)");
    const nlohmann::json json = {{"kind", "rw-covariance"}, {"n", {200, 400}}, {"replicates", 10}, {"times", {0.5, 1.0}}, {"law", "poisson_mixture"},
                                 {"kernel", {{"steps", {{-1, 0.25}, {2, 0.75}}}}}, {"profile", {{"shape", "linear"}, {"slope", 1.0}, {"variance_ratio", 2.0}}}};
    EXPECT_EQ(config_from_json(toml).to_json(), config_from_json(json).to_json());
    EXPECT_THROW(toml_to_json("kind = "), ConfigError);
}

TEST(Cli, WorkerCountDoesNotChangeSummary) {
    auto one = small_covariance(scratch("w1"));
    auto many = small_covariance(scratch("w3"));
    many.workers = 3;
    run(one);
    run(many);
    EXPECT_EQ(slurp(one.out / "summary.json"), slurp(many.out / "summary.json"));
    EXPECT_EQ(slurp(one.out / "covariance_n100_b1.csv"), slurp(many.out / "covariance_n100_b1.csv"));
}

TEST(Cli, ResumeMatchesUninterruptedRun) {
    auto full = small_covariance(scratch("full"));
    run(full);
    auto part = small_covariance(scratch("part"));
    const auto first = run(part, {false, 30});
    EXPECT_TRUE(first.interrupted);
    EXPECT_FALSE(fs::exists(part.out / "summary.json"));
    part.workers = 2;
    const auto second = run(part, {true, std::nullopt});
    EXPECT_FALSE(second.interrupted);
    EXPECT_EQ(slurp(full.out / "summary.json"), slurp(part.out / "summary.json"));
}

TEST(Cli, FbmFirstCoordinateIsZero) {
    ExperimentConfig c;
    c.kind = ExperimentKind::fbm_sample;
    c.cov_variant = "equilibrium";
    c.times = {0.0, 1.0};
    c.replicates = 200;
    c.raw = true;
    c.seed = 77;
    c.out = scratch("fbm");
    const auto res = run(c);
    std::ifstream in(c.out / "raw.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "replicate,t,Z");
    std::size_t zeros = 0;
    while (std::getline(in, line))
        if (line.find(",0,") != std::string::npos) {
            EXPECT_EQ(line.substr(line.rfind(',') + 1), "0");
            ++zeros;
        }
    EXPECT_EQ(zeros, 200u);
    EXPECT_EQ(res.summary["verdicts"][1]["pass"], true);
}

TEST(Cli, ExecutableWritesArtifacts) {
    const auto dir = scratch("exe");
    std::ofstream(dir / "c.json") << R"({"kind": "brownian-current", "lambda": 20, "times": [1, 2], "replicates": 50})";
    ASSERT_EQ(run_exe((dir / "c.json").string() + " --raw --workers 2 --seed 5 --out " + (dir / "out").string()), 0);
    const auto summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
    EXPECT_EQ(summary["schema_version"], 1);
    EXPECT_EQ(summary["config"]["seed"], 5);
    EXPECT_TRUE(fs::exists(dir / "out" / "verdict.txt"));
    EXPECT_TRUE(fs::exists(dir / "out" / "raw.csv"));
    EXPECT_EQ(slurp(dir / "out" / "covariance_b0.csv").substr(0, 31), "s,t,empirical,theoretical,se,z\n");
}

TEST(Cli, UnwritableOutputIsRuntimeError) {
    const auto dir = scratch("io");
    std::ofstream(dir / "blocker") << "x";
    std::ofstream(dir / "c.toml") << "kind = \"hopf-lax-map\"\nxs = [0.5]\n";
    EXPECT_EQ(run_exe((dir / "c.toml").string() + " --out " + (dir / "blocker" / "sub").string()), 2);
    EXPECT_EQ(run_exe((dir / "missing.toml").string()), 1);
}

TEST(Cli, HammersleyAndHopfLaxRuns) {
    ExperimentConfig h;
    h.kind = ExperimentKind::hammersley_tightness;
    h.profile = Profile::wedge();
    h.ns = {40, 80};
    h.replicates = 12;
    h.bootstrap = 50;
    h.out = scratch("ham1");
    auto h3 = h;
    h3.workers = 3;
    h3.out = scratch("ham3");
    run(h);
    run(h3);
    EXPECT_EQ(slurp(h.out / "summary.json"), slurp(h3.out / "summary.json"));
    EXPECT_EQ(slurp(h.out / "hammersley.csv").substr(0, 27), "n,replicate,Y_n,normalizer\n");

    ExperimentConfig m;
    m.kind = ExperimentKind::hopf_lax_map;
    m.profile = Profile::linear(1.0);
    m.xs = {0.0, 0.5, 1.0};
    m.t = 0.5;
    m.out = scratch("hl");
    const auto res = run(m);
    EXPECT_TRUE(res.all_pass);
    EXPECT_NEAR(res.summary["results"]["rows"][2]["u"].get<double>(), 0.5, 1e-12);
    EXPECT_EQ(slurp(m.out / "hopf_lax.csv").substr(0, 21), "x,u,shock,minimizers\n");
}

TEST(Cli, ShippedConfigsValidate) {
    std::size_t count = 0;
    for (const auto& entry : fs::directory_iterator(CHARFLUX_CONFIG_DIR)) {
        SCOPED_TRACE(entry.path().string());
        EXPECT_NO_THROW(validate(load_config(entry.path())));
        ++count;
    }
    EXPECT_GE(count, 2u);
}
