#pragma once

#include "fluorosim/detector.hpp"
#include "fluorosim/optics.hpp"
#include "fluorosim/phantom.hpp"
#include "fluorosim/ratio_map.hpp"
#include "fluorosim/scanner.hpp"
#include "fluorosim/spectral.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fluorosim::experiment {

enum class ScanMode { raster, line };

struct LineSpec {
    double x0 = 0.85;
    double y0 = 5.75;
    double x1 = 11.35;
    double y1 = 5.75;
    double step = 0.5;  // mm
};

// One experiment definition. Defaults describe the reference run:
// ~5 mm^2 tumour, 1 mm raster through a diamond window, 4 uW excitation.
struct ExperimentConfig {
    std::uint64_t seed = 20240501;
    std::string output_dir = "out";

    double grid_min = 400.0;
    double grid_max = 750.0;
    double grid_step = 1.0;

    spectral::EmissionModel emission;
    optics::LedModel led;
    optics::FilterSpec excitation_bandpass = optics::FilterSpec::bandpass(405.0, 10.0, 0.9, 4.0);
    bool emission_longpass_enabled = true;
    optics::FilterSpec emission_longpass = optics::FilterSpec::longpass(425.0, 1.0, 2.4, 5.0);

    optics::WindowState window;

    detector::ChannelSpec ch514 = detector::ChannelSpec::green();
    detector::ChannelSpec ch635 = detector::ChannelSpec::red();
    detector::DetectorConfig detector;
    detector::SpectrometerConfig spectrometer{5.0, 0.01};

    phantom::PhantomConfig phantom;

    ScanMode scan_mode = ScanMode::raster;
    scanner::ScanConfig scan = default_scan();
    LineSpec line;

    analysis::AnalysisSettings analysis;

    spectral::WavelengthGrid grid() const { return {grid_min, grid_max, grid_step}; }
    scanner::OpticalChain chain() const;
    void validate() const;

    static scanner::ScanConfig default_scan();
};

// Strict JSON parsing: unknown keys, wrong types and out-of-range values throw
// ConfigError naming the dotted key path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
// Canonical JSON of every field (defaults included).
std::string to_json(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

// Detector, spectrometer, heterogeneity and fouling noise switched off.
void disable_noise(ExperimentConfig& cfg);

std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

struct RunManifest {
    std::string command;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string tool_version;
    std::map<std::string, std::string> checksums;  // relative path -> fnv1a hex
    double wall_clock_s = 0.0;

    std::string to_json() const;
};

// Shared phantom for a config: generated from the config seed.
phantom::Phantom make_phantom(const ExperimentConfig& cfg);

struct SynthSpectra {
    spectral::Spectrum healthy;
    spectral::Spectrum tumour_center;
    spectral::Spectrum margin;
    spectral::Spectrum led_raw;
    spectral::Spectrum led_filtered;
};
SynthSpectra synthesize_reference_spectra(const ExperimentConfig& cfg);

// Each command writes its outputs under cfg.output_dir and returns the
// manifest (also written as manifest_<command>.json).
RunManifest cmd_synth(const ExperimentConfig& cfg);
RunManifest cmd_scan(const ExperimentConfig& cfg);
RunManifest cmd_analyze(const ExperimentConfig& cfg, const std::string& scan_csv, const std::string& oracle_dir,
                        bool plots);
// Re-reads the analysis CSVs and report, prints a text summary, optionally
// regenerates the SVG plots.
std::string cmd_report(const ExperimentConfig& cfg, bool plots);

std::string ratio_map_svg(const analysis::RatioMap& m, const std::vector<bool>& predicted);
std::string roc_svg(const analysis::RocCurve& c);

}  // namespace fluorosim::experiment
