// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "cirrange/harness/config.hpp"
#include "doctest.h"

using namespace cirrange;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "cirrange");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch() {
    const auto dir = fs::temp_directory_path() / "cirrange_unit" / "cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_config(const fs::path& path, int rows_taps = 64, std::uint64_t seed = 4) {
    auto cfg = harness::ExperimentConfig::defaults(channel::ScenarioKind::Los);
    cfg.master_seed = seed;
    cfg.n_train_spots = 2;
    cfg.n_test_spots = 2;
    cfg.frames_per_spot_min = cfg.frames_per_spot_max = 2;
    cfg.n_taps_kept = rows_taps;
    cfg.train.epochs = 2;
    cfg.train.batch_size = 4;
    std::ofstream(path) << harness::format_config(cfg);
}

}  // namespace

TEST_CASE("usage errors exit 2") {
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"bogus"}).code == cli::kExitUsage);
    CHECK(run({"gen", "--config", "/nonexistent/x.cfg", "--out", "y"}).code == cli::kExitUsage);
    const auto r = run({"gradcheck", "--no-such-flag"});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("--no-such-flag") != std::string::npos);
    CHECK(run({"train", "--dataset", "/nonexistent.cird", "--out", "m"}).code == cli::kExitUsage);
}

TEST_CASE("help exits 0") {
    const auto r = run({"--help"});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("gradcheck") != std::string::npos);
}

TEST_CASE("gen, train, eval, inspect") {
    const auto dir = scratch();
    write_config(dir / "a.cfg");
    auto r = run({"gen", "--config", (dir / "a.cfg").string(), "--out", (dir / "d.cird").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("8 samples (4 train, 4 test)") != std::string::npos);

    r = run({"train", "--dataset", (dir / "d.cird").string(), "--out", (dir / "m.cirm").string(), "--model", "rssi",
             "--epochs", "3"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("after 3 epochs") != std::string::npos);

    r = run({"eval", "--model", (dir / "m.cirm").string(), "--dataset", (dir / "d.cird").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("RSSI_MLP", 0) == 0);
    CHECK(r.out.find("n 4") != std::string::npos);

    r = run({"inspect", "--dataset", (dir / "d.cird").string(), "--index", "5", "--pgm", (dir / "s.pgm").string(),
             "--scale", "2"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("index 5\n") != std::string::npos);
    CHECK(r.out.find("split test\n") != std::string::npos);
    CHECK(r.out.find("image 40x64\n") != std::string::npos);
    std::ifstream pgm(dir / "s.pgm", std::ios::binary);
    std::string magic;
    pgm >> magic;
    CHECK(magic == "P5");
    CHECK(fs::file_size(dir / "s.pgm") == std::string("P5\n128 80\n255\n").size() + 128u * 80u);

    CHECK(run({"inspect", "--dataset", (dir / "d.cird").string(), "--index", "99"}).code == cli::kExitUsage);
    fs::remove_all(dir);
}

TEST_CASE("eval names both shapes on a model/dataset mismatch") {
    const auto dir = scratch();
    write_config(dir / "a.cfg", 64);
    write_config(dir / "b.cfg", 48);
    REQUIRE(run({"gen", "--config", (dir / "a.cfg").string(), "--out", (dir / "a.cird").string()}).code == 0);
    REQUIRE(run({"gen", "--config", (dir / "b.cfg").string(), "--out", (dir / "b.cird").string()}).code == 0);
    REQUIRE(run({"train", "--dataset", (dir / "a.cird").string(), "--out", (dir / "m.cirm").string(), "--epochs", "1"})
                .code == 0);
    const auto r = run({"eval", "--model", (dir / "m.cirm").string(), "--dataset", (dir / "b.cird").string()});
    CHECK(r.code == cli::kExitFailure);
    CHECK(r.err.find("[40, 64, 1]") != std::string::npos);
    CHECK(r.err.find("[40, 48, 1]") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("run writes the report") {
    const auto dir = scratch();
    write_config(dir / "a.cfg");
    const auto r = run({"run", "--config", (dir / "a.cfg").string(), "--out", (dir / "out").string(), "-q"});
    REQUIRE(r.code == 0);
    CHECK(r.err.empty());
    CHECK(r.out.find("CIR_CNN") != std::string::npos);
    CHECK(r.out.find("RSSI_MLP") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "report.txt"));
    fs::remove_all(dir);
}

TEST_CASE("gradcheck passes and detects an injected fault") {
    const auto ok = run({"gradcheck", "--params", "30", "--rows", "24", "--cols", "24"});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("cir_cnn") != std::string::npos);
    CHECK(ok.out.find("FAIL") == std::string::npos);

    const auto bad = run({"gradcheck", "--params", "30", "--rows", "24", "--cols", "24", "--fault", "0.1"});
    CHECK(bad.code == cli::kExitFailure);
    CHECK(bad.out.find("FAIL") != std::string::npos);
}
