#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string kCli = DEEPLS_CLI_PATH;
const std::string kSource = DEEPLS_SOURCE_DIR;

int run(const std::string& args) {
    const std::string cmd = "\"" + kCli + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("deepls_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::vector<std::string>& header) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    header.clear();
    std::stringstream hs(line);
    for (std::string c; std::getline(hs, c, ',');) header.push_back(c);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> r;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) r.push_back(std::stod(c));
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TEST(Cli, ExportAnalyticCylinderPressureRange) {
    const fs::path dir = scratch("export");
    ASSERT_EQ(run("export-field --analytic cylinder --grid 60 -o " + (dir / "f.csv").string()), 0);
    std::vector<std::string> h;
    const auto rows = read_csv(dir / "f.csv", h);
    EXPECT_EQ(h, (std::vector<std::string>{"x", "y", "P", "p", "u_x", "u_y"}));
    ASSERT_GT(rows.size(), 1000u);
    for (const auto& r : rows) {
        EXPECT_GE(r[3], 1.0 - 1e-9);
        EXPECT_LE(r[3], 10.0 + 1e-9);
    }
}

TEST(Cli, SolveSmokeWritesArtifacts) {
    const fs::path dir = scratch("solve");
    ASSERT_EQ(run("solve --config " + kSource + "/configs/smoke.json --out-dir " + dir.string() + " --quiet"), 0);
    for (const char* f : {"resolved_config.json", "checkpoint.dlsp", "final.dlsp", "loss_history.csv", "field.csv",
                          "summary.json"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    EXPECT_EQ(summary.at("adam_epochs"), 5);
    EXPECT_LE(summary.at("loss_final").at("total").get<double>(), summary.at("loss_after_adam").at("total").get<double>());
    const auto resolved = nlohmann::json::parse(slurp(dir / "resolved_config.json"));
    EXPECT_EQ(resolved.at("network").at("seed"), 3);
    EXPECT_EQ(resolved.at("weights").at("mode"), "coercivity");

    // a trained checkpoint exports on its own config
    ASSERT_EQ(run("export-field --checkpoint " + (dir / "final.dlsp").string() + " --config " + kSource +
                  "/configs/smoke.json --grid 10 -o " + (dir / "again.csv").string()),
              0);
    std::vector<std::string> h;
    EXPECT_FALSE(read_csv(dir / "again.csv", h).empty());
}

TEST(Cli, ZeroEpochsProducesUntrainedArtifacts) {
    const fs::path dir = scratch("zero");
    ASSERT_EQ(run("solve --config " + kSource + "/configs/smoke.json --epochs 0 --lbfgs-iters 0 --out-dir " +
                  dir.string() + " --quiet"),
              0);
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    EXPECT_EQ(summary.at("adam_iterations"), 0);
    EXPECT_EQ(summary.at("lbfgs_status"), "not_run");
}

TEST(Cli, ConfigErrorsExitWithTwo) {
    const fs::path dir = scratch("bad");
    std::string text = slurp(kSource + "/configs/smoke.json");
    text.replace(text.find("\"value\": 1.0"), 12, "\"value\": 0.0");
    std::ofstream(dir / "bad.json") << text;
    EXPECT_EQ(run("solve --config " + (dir / "bad.json").string() + " --out-dir " + dir.string()), 2);
    EXPECT_EQ(run("solve --config " + (dir / "missing.json").string()), 2);
    EXPECT_EQ(run("benchmark tunnel"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, SweepWritesCsv) {
    const fs::path dir = scratch("sweep");
    ASSERT_EQ(run("sweep --case cylinder --depths 1 --widths 4,6 --seeds 1 --epochs 2 --lbfgs-iters 0 --quiet --out-dir " +
                  dir.string()),
              0);
    std::vector<std::string> h;
    const auto rows = read_csv(dir / "sweep.csv", h);
    EXPECT_EQ(h.size(), 7u);
    EXPECT_EQ(rows.size(), 2u);
}
