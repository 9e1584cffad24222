#include "fluorosim/csv.hpp"
#include "fluorosim/errors.hpp"
#include "fluorosim/experiment.hpp"

#include <doctest.h>

#include "approx.hpp"
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fluorosim;
using namespace fluorosim::experiment;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream b;
    b << in.rdbuf();
    return b.str();
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("fluorosim_exp_" + name);
    fs::remove_all(p);
    return p;
}

std::string config_error(const std::string& text) {
    try {
        (void)parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

// Local maxima of a sampled spectrum, in nm.
std::vector<double> local_maxima(const spectral::Spectrum& s) {
    std::vector<double> out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (s[i] > s[i - 1] && s[i] >= s[i + 1]) out.push_back(s.grid().wavelength(i));
    }
    return out;
}

bool has_peak_near(const std::vector<double>& peaks, double lambda, double tol) {
    for (double p : peaks) {
        if (std::abs(p - lambda) <= tol) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("empty config yields the documented defaults") {
    const auto cfg = parse_config("{}");
    const ExperimentConfig defaults;
    CHECK(to_json(cfg) == to_json(defaults));
    CHECK(cfg.phantom.center_ratio_target == 5.0);
    CHECK(cfg.window.model.material == optics::WindowMaterial::diamond);
    CHECK(cfg.ch635.od_floor == 2.43);
    CHECK(cfg.ch514.od_floor == 2.35);
    CHECK(cfg.scan.record_oracle);
    CHECK(cfg.detector.nep == 4.0);
}

TEST_CASE("canonical JSON round trips") {
    auto cfg = parse_config(R"({"seed": 17, "window": {"material": "glass"}, "phantom": {"center_ratio_target": null},
                                "scan": {"mode": "line", "spot": [0.5, 0.5], "line": {"step": 0.25}}})");
    CHECK(cfg.seed == 17);
    CHECK(cfg.window.model.base_transmission_red == 0.92);
    CHECK(cfg.window.model.fouling_mean == 0.60);
    CHECK_FALSE(cfg.phantom.center_ratio_target.has_value());
    CHECK(cfg.scan_mode == ScanMode::line);
    CHECK(cfg.scan.spot_width == 0.5);
    CHECK(cfg.line.step == 0.25);
    const auto text = to_json(cfg);
    CHECK(to_json(parse_config(text)) == text);
    CHECK(config_hash(parse_config(text)) == config_hash(cfg));

    auto other = cfg;
    other.seed = 18;
    CHECK(config_hash(other) != config_hash(cfg));
    other = cfg;
    other.scan.threads = 8;
    other.output_dir = "elsewhere";
    CHECK(config_hash(other) == config_hash(cfg));
}

TEST_CASE("strict config parsing") {
    CHECK(config_error(R"({"phantom": {"tumour_radius": 1.0}})").find("phantom.tumour_radius") != std::string::npos);
    CHECK(config_error(R"({"sead": 1})").find("'sead'") != std::string::npos);
    CHECK(config_error(R"({"detector": {"nep": "four"}})").find("detector.nep") != std::string::npos);
    CHECK(config_error(R"({"scan": {"mode": "spiral"}})").find("scan.mode") != std::string::npos);
    CHECK(config_error(R"({"window": {"material": "sapphire"}})").find("window.material") != std::string::npos);
    CHECK(config_error(R"({"phantom": {"tumor_center": [1]}})").find("phantom.tumor_center") != std::string::npos);
    CHECK(config_error(R"({"seed": -3})").find("seed") != std::string::npos);

    const auto syntax = config_error("{\n  \"seed\": 1,\n  \"grid\": { \"step\": }\n}");
    CHECK(syntax.find("line 3") != std::string::npos);

    // Range errors surface as config errors too.
    CHECK_FALSE(config_error(R"({"detector": {"adc_bits": 40}})").empty());
    CHECK_FALSE(config_error(R"({"phantom": {"tumor_center": [0.2, 6]}})").empty());
    CHECK_FALSE(config_error(R"({"spectrometer": {"resolution": 0.5}})").empty());
    CHECK_FALSE(config_error("[]").empty());
}

TEST_CASE("disabling noise") {
    ExperimentConfig cfg;
    disable_noise(cfg);
    CHECK(cfg.detector.nep == 0.0);
    CHECK(cfg.spectrometer.noise_sd == 0.0);
    CHECK(cfg.phantom.heterogeneity == 0.0);
    CHECK_FALSE(cfg.scan.fouling_per_position);
}

TEST_CASE("synth writes the three reference spectra") {
    ExperimentConfig cfg;
    cfg.output_dir = scratch("synth").string();
    const auto manifest = cmd_synth(cfg);
    for (const char* name : {"healthy", "tumour_center", "margin", "excitation_led", "excitation_filtered"}) {
        CHECK(manifest.checksums.count(std::string("spectra/") + name + ".csv") == 1);
    }
    const auto tumour = spectral::read_csv((fs::path(cfg.output_dir) / "spectra/tumour_center.csv").string());
    const auto peaks = local_maxima(tumour);
    CHECK(has_peak_near(peaks, 510, 5));
    CHECK(has_peak_near(peaks, 635, 2));
    CHECK(has_peak_near(peaks, 704, 3));

    const auto healthy = spectral::read_csv((fs::path(cfg.output_dir) / "spectra/healthy.csv").string());
    const auto margin = spectral::read_csv((fs::path(cfg.output_dir) / "spectra/margin.csv").string());
    CHECK(tumour.at(635) > margin.at(635));
    CHECK(margin.at(635) > healthy.at(635));
    CHECK(fs::exists(fs::path(cfg.output_dir) / "manifest_synth.json"));
    fs::remove_all(cfg.output_dir);
}

TEST_CASE("synth without PpIX gives identical tumour and healthy spectra") {
    ExperimentConfig cfg;
    cfg.phantom.center_ratio_target.reset();
    cfg.phantom.ppix_peak_amp = 0.0;
    cfg.output_dir = scratch("synth0").string();
    (void)cmd_synth(cfg);
    const fs::path dir = fs::path(cfg.output_dir) / "spectra";
    CHECK(slurp(dir / "healthy.csv") == slurp(dir / "tumour_center.csv"));
    CHECK(slurp(dir / "healthy.csv") == slurp(dir / "margin.csv"));
    fs::remove_all(cfg.output_dir);
}

TEST_CASE("scan and analyze are byte-for-byte reproducible") {
    ExperimentConfig cfg;
    const auto a = scratch("rep_a");
    const auto b = scratch("rep_b");
    cfg.output_dir = a.string();
    const auto ma = cmd_scan(cfg);
    (void)cmd_analyze(cfg, (a / "scan.csv").string(), (a / "oracle").string(), true);
    cfg.output_dir = b.string();
    cfg.scan.threads = 4;
    const auto mb = cmd_scan(cfg);
    (void)cmd_analyze(cfg, (b / "scan.csv").string(), (b / "oracle").string(), true);

    // config.json echoes threads and the output directory; every data file
    // must match.
    auto data_only = [](std::map<std::string, std::string> m) {
        m.erase("config.json");
        return m;
    };
    CHECK(data_only(ma.checksums) == data_only(mb.checksums));
    CHECK(ma.config_hash == mb.config_hash);
    for (const char* f : {"scan.csv", "phantom.csv", "ratio_map.csv", "roc.csv", "report.json", "ratio_map.svg", "roc.svg",
                          "oracle/cell_00000.csv", "oracle/cell_00143.csv"}) {
        CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
    }
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("analysis report fields and CSV round trips") {
    ExperimentConfig cfg;
    const auto dir = scratch("analyze");
    cfg.output_dir = dir.string();
    (void)cmd_scan(cfg);
    const auto m = cmd_analyze(cfg, (dir / "scan.csv").string(), (dir / "oracle").string(), false);
    CHECK(m.checksums.count("report.json") == 1);
    CHECK_FALSE(fs::exists(dir / "roc.svg"));

    const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    for (const char* key : {"auc", "sensitivity", "specificity", "optimum_threshold", "r_s"}) CHECK(report.contains(key));
    const double rs = report["r_s"].get<double>();
    CHECK(rs >= -1.0);
    CHECK(rs <= 1.0);

    std::vector<bool> predicted;
    std::istringstream map_in(slurp(dir / "ratio_map.csv"));
    const auto map = analysis::read_ratio_csv(map_in, &predicted);
    CHECK(map.rows == 12);
    CHECK(map.cols == 12);
    std::ostringstream map_out;
    analysis::write_csv(map_out, map, predicted);
    CHECK(map_out.str() == slurp(dir / "ratio_map.csv"));

    std::istringstream roc_in(slurp(dir / "roc.csv"));
    const auto curve = analysis::read_roc_csv(roc_in);
    std::ostringstream roc_out;
    analysis::write_csv(roc_out, curve);
    CHECK(roc_out.str() == slurp(dir / "roc.csv"));
    CHECK(curve.auc == approx(report["auc"].get<double>()).epsilon(1e-12));

    std::istringstream field_in(slurp(dir / "phantom.csv"));
    const auto field = phantom::read_csv(field_in);
    CHECK(field == make_phantom(cfg).field);

    const auto text = cmd_report(cfg, true);
    CHECK(text.find("auc") != std::string::npos);
    CHECK(fs::exists(dir / "roc.svg"));
    fs::remove_all(dir);
}

TEST_CASE("analysis rejects single-class truth") {
    ExperimentConfig cfg;
    cfg.phantom.center_ratio_target.reset();
    cfg.phantom.ppix_peak_amp = 0.0;
    const auto dir = scratch("single");
    cfg.output_dir = dir.string();
    (void)cmd_scan(cfg);
    try {
        (void)cmd_analyze(cfg, (dir / "scan.csv").string(), "", false);
        FAIL("expected a data error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("class") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("noise-free scan of a uniform field") {
    ExperimentConfig cfg;
    cfg.phantom.center_ratio_target.reset();
    cfg.phantom.ppix_peak_amp = 0.0;
    disable_noise(cfg);
    const auto dir = scratch("uniform");
    cfg.output_dir = dir.string();
    (void)cmd_scan(cfg);
    std::istringstream in(slurp(dir / "scan.csv"));
    const auto m = scanner::read_csv(in);
    for (const auto& r : m.records) {
        CHECK(r.reading_514.counts == m.records[0].reading_514.counts);
        CHECK(r.reading_635.counts == m.records[0].reading_635.counts);
    }
    fs::remove_all(dir);
}

TEST_CASE("line mode writes a displacement profile") {
    auto cfg = parse_config(R"({"scan": {"mode": "line"}})");
    const auto dir = scratch("line");
    cfg.output_dir = dir.string();
    const auto m = cmd_scan(cfg);
    CHECK(m.checksums.count("line.csv") == 1);
    CHECK(m.checksums.count("scan.csv") == 0);
    const auto t = csv::Table::read((dir / "line.csv").string(), {"displacement_mm", "x_mm", "y_mm", "counts_514",
                                                                   "counts_635", "raw_ratio", "normalized_ratio"});
    REQUIRE(t.rows() == 22);
    CHECK(t.number(1, 0) == 0.5);
    CHECK(t.number(21, 0) == 10.5);
    std::size_t best = 0;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        if (t.number(r, 6) > t.number(best, 6)) best = r;
    }
    CHECK(t.number(best, 6) == 1.0);
    CHECK(std::abs(t.number(best, 1) - 6.35) <= 0.5 + 1e-9);
    fs::remove_all(dir);
}

TEST_CASE("manifest JSON") {
    RunManifest m;
    m.command = "scan";
    m.config_hash = 0xabcdefULL;
    m.seed = 3;
    m.tool_version = "x";
    m.checksums["a.csv"] = "00";
    const auto j = nlohmann::json::parse(m.to_json());
    CHECK(j["config_hash"] == "0000000000abcdef");
    CHECK(j["checksums"]["a.csv"] == "00");
    CHECK(j.contains("wall_clock_s"));
    CHECK(hex64(fnv1a("")) == "cbf29ce484222325");
    CHECK(hex64(fnv1a("a")) == "af63dc4c8601ec8c");
}
