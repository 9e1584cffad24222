// Drives the installed command-line tool as a subprocess.
#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <stdexcept>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#ifndef FLUOROSIM_CLI
#error "FLUOROSIM_CLI must point at the tool binary"
#endif

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(FLUOROSIM_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream b;
    b << in.rdbuf();
    return b.str();
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("fluorosim_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_CASE("full pipeline through the tool") {
    const auto dir = scratch("pipe");
    CHECK(run("synth --out " + dir.string()) == 0);
    CHECK(run("scan --out " + dir.string()) == 0);
    CHECK(run("analyze --plots --out " + dir.string()) == 0);
    CHECK(run("report --out " + dir.string()) == 0);
    for (const char* f : {"spectra/healthy.csv", "scan.csv", "ratio_map.csv", "roc.csv", "report.json", "roc.svg",
                          "manifest_scan.json", "manifest_analyze.json"}) {
        CHECK_MESSAGE(fs::exists(dir / f), f);
    }
    const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(report.contains("auc"));
    CHECK(report.contains("sensitivity"));
    CHECK(report.contains("specificity"));
    fs::remove_all(dir);
}

TEST_CASE("seed flag overrides the config and reruns are identical") {
    const auto a = scratch("seed_a");
    const auto b = scratch("seed_b");
    const auto c = scratch("seed_c");
    write(a / "cfg.json", R"({"seed": 5})");
    CHECK(run("scan --config " + (a / "cfg.json").string() + " --seed 11 --out " + a.string()) == 0);
    CHECK(run("scan --seed 11 --out " + b.string()) == 0);
    CHECK(run("scan --seed 12 --out " + c.string()) == 0);
    CHECK(slurp(a / "scan.csv") == slurp(b / "scan.csv"));
    CHECK(slurp(a / "scan.csv") != slurp(c / "scan.csv"));
    const auto manifest = nlohmann::json::parse(slurp(a / "manifest_scan.json"));
    CHECK(manifest["seed"] == 11);
    fs::remove_all(a);
    fs::remove_all(b);
    fs::remove_all(c);
}

TEST_CASE("no-noise flag") {
    const auto a = scratch("nn_a");
    const auto b = scratch("nn_b");
    CHECK(run("scan --no-noise --seed 1 --out " + a.string()) == 0);
    CHECK(run("scan --no-noise --seed 2 --out " + b.string()) == 0);
    // With every noise source off the seed no longer matters.
    CHECK(slurp(a / "scan.csv") == slurp(b / "scan.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("exit codes") {
    const auto dir = scratch("codes");
    write(dir / "typo.json", R"({"phantom": {"tumour_radius": 1}})");
    write(dir / "broken.json", "{ \"seed\": ");
    CHECK(run("scan --config " + (dir / "typo.json").string() + " --out " + dir.string()) == 2);
    CHECK(run("synth --config " + (dir / "broken.json").string() + " --out " + dir.string()) == 2);
    CHECK(run("scan --config " + (dir / "missing.json").string()) == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("") == 2);

    write(dir / "bad.csv", "x_mm,y_mm,counts_514,counts_635,truth\n0.5,0.5,nan?,1,0\n");
    CHECK(run("analyze " + (dir / "bad.csv").string() + " --out " + dir.string()) == 3);
    CHECK(run("analyze " + (dir / "absent.csv").string() + " --out " + dir.string()) == 3);
    CHECK(run("report --out " + (dir / "empty").string()) == 3);

    write(dir / "zero.json", R"({"phantom": {"center_ratio_target": null, "ppix_peak_amp": 0}})");
    CHECK(run("scan --config " + (dir / "zero.json").string() + " --out " + dir.string()) == 0);
    CHECK(run("analyze --out " + dir.string()) == 3);
    fs::remove_all(dir);
}
