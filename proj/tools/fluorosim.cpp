// fluorosim: command-line driver for the ratiometric sensing simulator.
//
//   fluorosim synth   [--config F] [--seed N] [--out DIR] [--no-noise]
//   fluorosim scan    [--config F] [--seed N] [--out DIR] [--no-noise]
//   fluorosim analyze [SCAN_CSV] [--oracle DIR] [--config F] [--out DIR] [--plots]
//   fluorosim report  [--config F] [--out DIR] [--plots]
//
// Exit status: 0 on success, 2 for configuration or usage errors, 3 for data
// errors (malformed CSV, single-class truth, failed fits).

#include "fluorosim/errors.hpp"
#include "fluorosim/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace ex = fluorosim::experiment;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool no_noise = false;
    bool plots = false;
};

void add_common(CLI::App* sub, CommonFlags& f, bool noise_flags) {
    sub->add_option("--config", f.config, "Experiment config (JSON); defaults apply to missing keys");
    sub->add_option("--out", f.out, "Output directory (overrides output_dir)");
    if (noise_flags) {
        sub->add_option("--seed", f.seed, "Random seed (overrides the config)");
        sub->add_flag("--no-noise", f.no_noise, "Disable detector, spectrometer, heterogeneity and fouling noise");
    }
}

ex::ExperimentConfig resolve(const CommonFlags& f) {
    auto cfg = f.config.empty() ? ex::ExperimentConfig{} : ex::load_config(f.config);
    if (f.seed) cfg.seed = *f.seed;
    if (!f.out.empty()) cfg.output_dir = f.out;
    if (f.no_noise) ex::disable_noise(cfg);
    cfg.validate();
    return cfg;
}

void print_manifest(const ex::RunManifest& m, const std::string& dir) {
    std::cout << m.command << ": wrote " << m.checksums.size() << " file(s) to " << dir << " (config "
              << ex::hex64(m.config_hash) << ", seed " << m.seed << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ratiometric fluorescence sensing simulator"};
    app.set_version_flag("--version", std::string(FLUOROSIM_VERSION));
    app.require_subcommand(1);

    CommonFlags synth_f, scan_f, analyze_f, report_f;
    auto* synth = app.add_subcommand("synth", "Write healthy, tumour-centre and margin emission spectra");
    add_common(synth, synth_f, true);
    auto* scan = app.add_subcommand("scan", "Generate the phantom and run the raster or line scan");
    add_common(scan, scan_f, true);

    auto* analyze = app.add_subcommand("analyze", "Ratio map, ROC and summary report from a scan CSV");
    add_common(analyze, analyze_f, false);
    std::string scan_csv;
    std::string oracle_dir;
    analyze->add_option("scan_csv", scan_csv, "Scan CSV (default: <out>/scan.csv)");
    analyze->add_option("--oracle", oracle_dir, "Oracle spectra directory (default: <out>/oracle when present)");
    analyze->add_flag("--plots", analyze_f.plots, "Also write SVG ratio map and ROC plots");

    auto* report = app.add_subcommand("report", "Print the analysis summary from an output directory");
    add_common(report, report_f, false);
    report->add_flag("--plots", report_f.plots, "Regenerate the SVG plots");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*synth) {
            const auto cfg = resolve(synth_f);
            print_manifest(ex::cmd_synth(cfg), cfg.output_dir);
        } else if (*scan) {
            const auto cfg = resolve(scan_f);
            print_manifest(ex::cmd_scan(cfg), cfg.output_dir);
        } else if (*analyze) {
            const auto cfg = resolve(analyze_f);
            const std::filesystem::path out(cfg.output_dir);
            if (scan_csv.empty()) scan_csv = (out / "scan.csv").string();
            if (oracle_dir.empty()) {
                // Oracles sit next to the scan CSV when the scan recorded them.
                oracle_dir = (std::filesystem::path(scan_csv).parent_path() / "oracle").string();
            } else if (!std::filesystem::is_directory(oracle_dir)) {
                throw fluorosim::DataError("oracle directory '" + oracle_dir + "' does not exist");
            }
            print_manifest(ex::cmd_analyze(cfg, scan_csv, oracle_dir, analyze_f.plots), cfg.output_dir);
        } else if (*report) {
            const auto cfg = resolve(report_f);
            std::cout << ex::cmd_report(cfg, report_f.plots);
        }
    } catch (const fluorosim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const fluorosim::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
