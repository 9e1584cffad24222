#include "fluorosim/experiment.hpp"

#include "fluorosim/csv.hpp"
#include "fluorosim/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#ifndef FLUOROSIM_VERSION
#define FLUOROSIM_VERSION "0.0.0"
#endif

namespace fluorosim::experiment {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

scanner::ScanConfig ExperimentConfig::default_scan() {
    scanner::ScanConfig sc;
    sc.record_oracle = true;
    return sc;
}

scanner::OpticalChain ExperimentConfig::chain() const {
    scanner::OpticalChain c;
    c.grid = grid();
    c.emission = emission;
    if (emission_longpass_enabled) c.emission_filter = emission_longpass; else c.emission_filter.reset();
    c.ch514 = ch514;
    c.ch635 = ch635;
    c.detector = detector;
    c.spectrometer = spectrometer;
    return c;
}

void ExperimentConfig::validate() const {
    try {
        const auto g = grid();
        emission.validate();
        led.validate();
        excitation_bandpass.validate();
        emission_longpass.validate();
        window.validate();
        ch514.validate();
        ch635.validate();
        if (!g.contains(ch514.center) || !g.contains(ch635.center)) throw std::invalid_argument("channel centre outside the grid");
        detector.validate();
        spectrometer.validate();
        if (spectrometer.resolution < g.step()) throw std::invalid_argument("spectrometer resolution below grid step");
        phantom.validate();
        scan.validate();
        if (!(line.step > 0.0)) throw std::invalid_argument("scan.line.step must be positive");
        analysis.fit.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Strict JSON reading

namespace {

class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(where() + "expected an object");
    }

    template <typename T>
    void read(const std::string& key, T& out) {
        const json* v = take(key);
        if (!v) return;
        convert(*v, key, out);
    }

    template <typename T>
    void read_optional(const std::string& key, std::optional<T>& out) {
        const json* v = take(key);
        if (!v) return;
        if (v->is_null()) {
            out.reset();
            return;
        }
        T tmp{};
        convert(*v, key, tmp);
        out = tmp;
    }

    void read_pair(const std::string& key, double& a, double& b) {
        const json* v = take(key);
        if (!v) return;
        if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
            throw ConfigError(where(key) + "expected [x, y] in mm");
        }
        a = (*v)[0].get<double>();
        b = (*v)[1].get<double>();
    }

    void with(const std::string& key, const std::function<void(Section&)>& body) {
        const json* v = take(key);
        if (!v) return;
        Section child(*v, path_.empty() ? key : path_ + "." + key);
        body(child);
        child.finish();
    }

    void finish() const {
        for (const auto& [key, value] : node_.items()) {
            if (!used_.count(key)) throw ConfigError(where(key) + "unknown key");
        }
    }

    std::string where(const std::string& key = "") const {
        std::string p = path_;
        if (!key.empty()) p = p.empty() ? key : p + "." + key;
        return "config key '" + (p.empty() ? std::string("<root>") : p) + "': ";
    }

private:
    const json* take(const std::string& key) {
        used_.insert(key);
        auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    void convert(const json& v, const std::string& key, double& out) const {
        if (!v.is_number()) throw ConfigError(where(key) + "expected a number");
        out = v.get<double>();
        if (!std::isfinite(out)) throw ConfigError(where(key) + "must be finite");
    }
    void convert(const json& v, const std::string& key, bool& out) const {
        if (!v.is_boolean()) throw ConfigError(where(key) + "expected true or false");
        out = v.get<bool>();
    }
    void convert(const json& v, const std::string& key, int& out) const {
        if (!v.is_number_integer()) throw ConfigError(where(key) + "expected an integer");
        out = v.get<int>();
    }
    void convert(const json& v, const std::string& key, unsigned& out) const {
        std::uint64_t wide = 0;
        convert(v, key, wide);
        if (wide > std::numeric_limits<unsigned>::max()) throw ConfigError(where(key) + "out of range");
        out = static_cast<unsigned>(wide);
    }
    void convert(const json& v, const std::string& key, std::uint64_t& out) const {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            throw ConfigError(where(key) + "expected a non-negative integer");
        }
        out = v.get<std::uint64_t>();
    }
    void convert(const json& v, const std::string& key, std::string& out) const {
        if (!v.is_string()) throw ConfigError(where(key) + "expected a string");
        out = v.get<std::string>();
    }

    const json& node_;
    std::string path_;
    std::set<std::string> used_;
};

void read_filter_common(Section& s, optics::FilterSpec& f) {
    s.read("peak_transmission", f.peak_transmission);
    s.read("od_floor", f.od_floor);
}

void read_channel(Section& s, detector::ChannelSpec& c) {
    s.read("center", c.center);
    s.read("fwhm", c.fwhm);
    s.read("peak_transmission", c.peak_transmission);
    s.read("od_floor", c.od_floor);
}

void read_peak_shape(Section& s, spectral::PeakModel& p) {
    s.read("center", p.center);
    s.read("fwhm", p.fwhm);
}

void read_fit(Section& s, analysis::FitOptions& f) {
    s.read("window_lo", f.window_lo);
    s.read("window_hi", f.window_hi);
    s.read("exclude_lo", f.exclude_lo);
    s.read("exclude_hi", f.exclude_hi);
    s.read("background_at", f.background_at);
    s.read("signal_at", f.signal_at);
    s.read("max_iterations", f.max_iterations);
    s.read("tolerance", f.tolerance);
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    ExperimentConfig cfg;
    Section top(root, "");
    top.read("seed", cfg.seed);
    top.read("output_dir", cfg.output_dir);
    top.with("grid", [&](Section& s) {
        s.read("lambda_min", cfg.grid_min);
        s.read("lambda_max", cfg.grid_max);
        s.read("step", cfg.grid_step);
    });
    top.with("emission", [&](Section& s) {
        s.with("autofluor", [&](Section& p) { read_peak_shape(p, cfg.emission.autofluor); });
        s.with("ppix_primary", [&](Section& p) { read_peak_shape(p, cfg.emission.ppix_primary); });
        s.with("ppix_secondary", [&](Section& p) {
            p.read("center", cfg.emission.ppix_secondary_center);
            p.read("fwhm", cfg.emission.ppix_secondary_fwhm);
            p.read("fraction", cfg.emission.ppix_secondary_fraction);
        });
    });
    top.with("excitation", [&](Section& s) {
        s.with("led", [&](Section& p) {
            p.read("center", cfg.led.primary.center);
            p.read("fwhm", cfg.led.primary.fwhm);
            p.read("secondary_center", cfg.led.secondary_center);
            p.read("secondary_fwhm", cfg.led.secondary_fwhm);
            p.read("secondary_fraction", cfg.led.secondary_fraction);
        });
        s.with("bandpass", [&](Section& p) {
            p.read("center", cfg.excitation_bandpass.center_or_cutoff);
            p.read("fwhm", cfg.excitation_bandpass.fwhm);
            read_filter_common(p, cfg.excitation_bandpass);
        });
    });
    top.with("emission_longpass", [&](Section& s) {
        s.read("enabled", cfg.emission_longpass_enabled);
        s.read("cutoff", cfg.emission_longpass.center_or_cutoff);
        s.read("edge_width", cfg.emission_longpass.edge_width);
        read_filter_common(s, cfg.emission_longpass);
    });
    top.with("window", [&](Section& s) {
        std::string material = optics::to_string(cfg.window.model.material);
        s.read("material", material);
        try {
            cfg.window.model = optics::WindowModel::for_material(optics::window_material_from_string(material));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(s.where("material") + e.what());
        }
        s.read("base_transmission_green", cfg.window.model.base_transmission_green);
        s.read("base_transmission_red", cfg.window.model.base_transmission_red);
        s.read("fouling_mean", cfg.window.model.fouling_mean);
        s.read("fouling_sd", cfg.window.model.fouling_sd);
        s.read("split_nm", cfg.window.model.split_nm);
        s.read("initial_attenuation", cfg.window.current_attenuation);
    });
    top.with("channels", [&](Section& s) {
        s.with("ch514", [&](Section& c) { read_channel(c, cfg.ch514); });
        s.with("ch635", [&](Section& c) { read_channel(c, cfg.ch635); });
    });
    top.with("detector", [&](Section& s) {
        s.read("nep", cfg.detector.nep);
        s.read("bandwidth", cfg.detector.bandwidth);
        s.read("adc_bits", cfg.detector.adc_bits);
        s.read("full_scale_power", cfg.detector.full_scale_power);
    });
    top.with("spectrometer", [&](Section& s) {
        s.read("resolution", cfg.spectrometer.resolution);
        s.read("noise_sd", cfg.spectrometer.noise_sd);
    });
    top.with("phantom", [&](Section& s) {
        auto& p = cfg.phantom;
        s.read("width", p.width);
        s.read("height", p.height);
        s.read("cell", p.cell);
        s.read_pair("tumor_center", p.tumor_center_x, p.tumor_center_y);
        s.read("tumor_radius", p.tumor_radius);
        s.read("autofluor_amp", p.autofluor_amp);
        s.read("ppix_peak_amp", p.ppix_peak_amp);
        s.read("margin_sigma", p.margin_sigma);
        s.read_optional("center_ratio_target", p.center_ratio_target);
        s.read("heterogeneity", p.heterogeneity);
        s.read("truth_fraction", p.truth_fraction);
    });
    top.with("scan", [&](Section& s) {
        auto& sc = cfg.scan;
        std::string mode = cfg.scan_mode == ScanMode::raster ? "raster" : "line";
        s.read("mode", mode);
        if (mode == "raster") cfg.scan_mode = ScanMode::raster;
        else if (mode == "line") cfg.scan_mode = ScanMode::line;
        else throw ConfigError(s.where("mode") + "expected 'raster' or 'line'");
        s.read("step", sc.step);
        s.read_pair("spot", sc.spot_width, sc.spot_height);
        s.read("excitation_power", sc.excitation_power);
        s.read("fouling_per_position", sc.fouling_per_position);
        s.read("record_oracle", sc.record_oracle);
        s.read_optional("origin_x", sc.origin_x);
        s.read_optional("origin_y", sc.origin_y);
        s.read("cols", sc.cols);
        s.read("rows", sc.rows);
        s.read("threads", sc.threads);
        s.with("line", [&](Section& l) {
            l.read_pair("start", cfg.line.x0, cfg.line.y0);
            l.read_pair("end", cfg.line.x1, cfg.line.y1);
            l.read("step", cfg.line.step);
        });
    });
    top.with("analysis", [&](Section& s) {
        s.read("alpha", cfg.analysis.alpha);
        s.read("margin_threshold", cfg.analysis.margin_threshold);
        s.read("spectrometer_margin_threshold", cfg.analysis.spectrometer_margin_threshold);
        s.with("fit", [&](Section& f) { read_fit(f, cfg.analysis.fit); });
    });
    top.finish();

    cfg.scan.window = optics::WindowState{cfg.window.model, cfg.window.current_attenuation};
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string to_json(const ExperimentConfig& c) {
    auto filter = [](const optics::FilterSpec& f) {
        return ojson{{"peak_transmission", f.peak_transmission}, {"od_floor", f.od_floor}};
    };
    auto channel = [](const detector::ChannelSpec& ch) {
        return ojson{{"center", ch.center}, {"fwhm", ch.fwhm}, {"peak_transmission", ch.peak_transmission}, {"od_floor", ch.od_floor}};
    };
    auto opt = [](const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); };

    ojson j;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["grid"] = {{"lambda_min", c.grid_min}, {"lambda_max", c.grid_max}, {"step", c.grid_step}};
    j["emission"] = {
        {"autofluor", {{"center", c.emission.autofluor.center}, {"fwhm", c.emission.autofluor.fwhm}}},
        {"ppix_primary", {{"center", c.emission.ppix_primary.center}, {"fwhm", c.emission.ppix_primary.fwhm}}},
        {"ppix_secondary",
         {{"center", c.emission.ppix_secondary_center}, {"fwhm", c.emission.ppix_secondary_fwhm}, {"fraction", c.emission.ppix_secondary_fraction}}}};
    auto bp = filter(c.excitation_bandpass);
    bp["center"] = c.excitation_bandpass.center_or_cutoff;
    bp["fwhm"] = c.excitation_bandpass.fwhm;
    j["excitation"] = {{"led",
                        {{"center", c.led.primary.center},
                         {"fwhm", c.led.primary.fwhm},
                         {"secondary_center", c.led.secondary_center},
                         {"secondary_fwhm", c.led.secondary_fwhm},
                         {"secondary_fraction", c.led.secondary_fraction}}},
                       {"bandpass", bp}};
    auto lp = filter(c.emission_longpass);
    lp["enabled"] = c.emission_longpass_enabled;
    lp["cutoff"] = c.emission_longpass.center_or_cutoff;
    lp["edge_width"] = c.emission_longpass.edge_width;
    j["emission_longpass"] = lp;
    j["window"] = {{"material", optics::to_string(c.window.model.material)},
                   {"base_transmission_green", c.window.model.base_transmission_green},
                   {"base_transmission_red", c.window.model.base_transmission_red},
                   {"fouling_mean", c.window.model.fouling_mean},
                   {"fouling_sd", c.window.model.fouling_sd},
                   {"split_nm", c.window.model.split_nm},
                   {"initial_attenuation", c.window.current_attenuation}};
    j["channels"] = {{"ch514", channel(c.ch514)}, {"ch635", channel(c.ch635)}};
    j["detector"] = {{"nep", c.detector.nep},
                     {"bandwidth", c.detector.bandwidth},
                     {"adc_bits", c.detector.adc_bits},
                     {"full_scale_power", c.detector.full_scale_power}};
    j["spectrometer"] = {{"resolution", c.spectrometer.resolution}, {"noise_sd", c.spectrometer.noise_sd}};
    const auto& p = c.phantom;
    j["phantom"] = {{"width", p.width},
                    {"height", p.height},
                    {"cell", p.cell},
                    {"tumor_center", {p.tumor_center_x, p.tumor_center_y}},
                    {"tumor_radius", p.tumor_radius},
                    {"autofluor_amp", p.autofluor_amp},
                    {"ppix_peak_amp", p.ppix_peak_amp},
                    {"margin_sigma", p.margin_sigma},
                    {"center_ratio_target", opt(p.center_ratio_target)},
                    {"heterogeneity", p.heterogeneity},
                    {"truth_fraction", p.truth_fraction}};
    const auto& sc = c.scan;
    j["scan"] = {{"mode", c.scan_mode == ScanMode::raster ? "raster" : "line"},
                 {"step", sc.step},
                 {"spot", {sc.spot_width, sc.spot_height}},
                 {"excitation_power", sc.excitation_power},
                 {"fouling_per_position", sc.fouling_per_position},
                 {"record_oracle", sc.record_oracle},
                 {"origin_x", opt(sc.origin_x)},
                 {"origin_y", opt(sc.origin_y)},
                 {"cols", sc.cols},
                 {"rows", sc.rows},
                 {"threads", sc.threads},
                 {"line", {{"start", {c.line.x0, c.line.y0}}, {"end", {c.line.x1, c.line.y1}}, {"step", c.line.step}}}};
    const auto& f = c.analysis.fit;
    j["analysis"] = {{"alpha", c.analysis.alpha},
                     {"margin_threshold", c.analysis.margin_threshold},
                     {"spectrometer_margin_threshold", c.analysis.spectrometer_margin_threshold},
                     {"fit",
                      {{"window_lo", f.window_lo},
                       {"window_hi", f.window_hi},
                       {"exclude_lo", f.exclude_lo},
                       {"exclude_hi", f.exclude_hi},
                       {"background_at", f.background_at},
                       {"signal_at", f.signal_at},
                       {"max_iterations", f.max_iterations},
                       {"tolerance", f.tolerance}}}};
    return j.dump(2) + "\n";
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    // threads and output_dir do not change results.
    auto copy = cfg;
    copy.scan.threads = 1;
    copy.output_dir.clear();
    return fnv1a(to_json(copy));
}

void disable_noise(ExperimentConfig& cfg) {
    cfg.detector.nep = 0.0;
    cfg.spectrometer.noise_sd = 0.0;
    cfg.phantom.heterogeneity = 0.0;
    cfg.scan.fouling_per_position = false;
}

std::string RunManifest::to_json() const {
    ojson j;
    j["command"] = command;
    j["config_hash"] = hex64(config_hash);
    j["seed"] = seed;
    j["tool_version"] = tool_version;
    ojson sums = ojson::object();
    for (const auto& [path, sum] : checksums) sums[path] = sum;
    j["checksums"] = sums;
    j["wall_clock_s"] = wall_clock_s;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Commands

namespace {

class OutputSet {
public:
    explicit OutputSet(const ExperimentConfig& cfg, std::string command)
        : root_(cfg.output_dir), start_(std::chrono::steady_clock::now()) {
        manifest_.command = std::move(command);
        manifest_.config_hash = config_hash(cfg);
        manifest_.seed = cfg.seed;
        manifest_.tool_version = FLUOROSIM_VERSION;
        std::error_code ec;
        fs::create_directories(root_, ec);
        if (ec) throw DataError("cannot create output directory '" + root_.string() + "': " + ec.message());
    }

    fs::path path(const std::string& rel) const { return root_ / rel; }

    void write(const std::string& rel, const std::string& content) {
        const auto p = root_ / rel;
        fs::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary);
        if (!out) throw DataError("cannot write '" + p.string() + "'");
        out << content;
        if (!out) throw DataError("failed writing '" + p.string() + "'");
        manifest_.checksums[rel] = hex64(fnv1a(content));
    }

    RunManifest finish() {
        manifest_.wall_clock_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        const auto p = root_ / ("manifest_" + manifest_.command + ".json");
        std::ofstream out(p, std::ios::binary);
        if (!out) throw DataError("cannot write '" + p.string() + "'");
        out << manifest_.to_json();
        return manifest_;
    }

private:
    fs::path root_;
    std::chrono::steady_clock::time_point start_;
    RunManifest manifest_;
};

template <typename Writer>
std::string render(Writer&& w) {
    std::ostringstream out;
    w(out);
    return out.str();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot open '" + p.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

phantom::Phantom make_phantom(const ExperimentConfig& cfg) {
    auto rng = RandomStream::derive(cfg.seed, stream_domain::phantom);
    // Calibrate against what the oracle spectrometer sees: its line shape
    // lowers the narrow 635 nm peak by several percent.
    const double resolution = cfg.spectrometer.resolution;
    auto instrument = [resolution](const spectral::Spectrum& s) {
        RandomStream unused(0);
        return detector::spectrometer_read(s, resolution, 0.0, unused);
    };
    return phantom::generate_phantom(cfg.phantom, rng, cfg.emission, cfg.grid(), cfg.analysis.fit, instrument);
}

SynthSpectra synthesize_reference_spectra(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto ph = make_phantom(cfg);
    const auto& p = cfg.phantom;
    const auto grid = cfg.grid();

    // Healthy reference: the inset field corner farthest from the tumour.
    const double inset = std::min({1.0, 0.5 * p.width, 0.5 * p.height});
    double hx = inset;
    double hy = inset;
    double best = -1.0;
    for (double cx : {inset, p.width - inset}) {
        for (double cy : {inset, p.height - inset}) {
            const double d = std::hypot(cx - p.tumor_center_x, cy - p.tumor_center_y);
            if (d > best) {
                best = d;
                hx = cx;
                hy = cy;
            }
        }
    }
    // Nominal autofluorescence so the three spectra differ only in PpIX.
    auto spectrum_at = [&](double x, double y) {
        const double ppix = phantom::emission_at(ph.field, x, y).second;
        return spectral::synthesize_emission(p.autofluor_amp, ppix, cfg.emission, grid) * cfg.scan.excitation_power;
    };
    const double mx = std::min(p.tumor_center_x + p.tumor_radius, p.width);

    auto led = cfg.led.spectrum(grid);
    auto filtered = optics::apply_filter(led, cfg.excitation_bandpass);
    return {spectrum_at(hx, hy), spectrum_at(p.tumor_center_x, p.tumor_center_y), spectrum_at(mx, p.tumor_center_y),
            std::move(led), std::move(filtered)};
}

RunManifest cmd_synth(const ExperimentConfig& cfg) {
    const auto spectra = synthesize_reference_spectra(cfg);
    OutputSet out(cfg, "synth");
    auto emit = [&](const std::string& name, const spectral::Spectrum& s) {
        out.write("spectra/" + name + ".csv", render([&](std::ostream& o) { spectral::write_csv(o, s); }));
    };
    emit("healthy", spectra.healthy);
    emit("tumour_center", spectra.tumour_center);
    emit("margin", spectra.margin);
    emit("excitation_led", spectra.led_raw);
    emit("excitation_filtered", spectra.led_filtered);
    out.write("config.json", to_json(cfg));
    return out.finish();
}

RunManifest cmd_scan(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto ph = make_phantom(cfg);
    const auto chain = cfg.chain();
    OutputSet out(cfg, "scan");
    out.write("phantom.csv", render([&](std::ostream& o) { phantom::write_csv(o, ph.field); }));

    if (cfg.scan_mode == ScanMode::raster) {
        scanner::ScanMap map;
        try {
            map = scanner::raster_scan(ph.field, cfg.scan, chain, cfg.seed);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        out.write("scan.csv", render([&](std::ostream& o) { scanner::write_csv(o, map); }));
        for (std::size_t k = 0; k < map.records.size(); ++k) {
            if (!map.records[k].oracle) continue;
            out.write("oracle/" + scanner::oracle_filename(k),
                      render([&](std::ostream& o) { spectral::write_csv(o, *map.records[k].oracle); }));
        }
    } else {
        std::vector<scanner::ScanRecord> recs;
        try {
            recs = scanner::line_scan(ph.field, cfg.line.x0, cfg.line.y0, cfg.line.x1, cfg.line.y1, cfg.line.step, cfg.scan,
                                      chain, cfg.seed);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        std::vector<double> raw(recs.size());
        for (std::size_t k = 0; k < recs.size(); ++k) {
            raw[k] = analysis::channel_ratio(recs[k].reading_635.counts, recs[k].reading_514.counts, cfg.analysis.alpha);
        }
        const auto norm = analysis::normalize(raw);
        out.write("line.csv", render([&](std::ostream& o) {
                      o << "displacement_mm,x_mm,y_mm,counts_514,counts_635,raw_ratio,normalized_ratio\n";
                      for (std::size_t k = 0; k < recs.size(); ++k) {
                          o << csv::format_double(static_cast<double>(k) * cfg.line.step) << ','
                            << csv::format_double(recs[k].x) << ',' << csv::format_double(recs[k].y) << ','
                            << recs[k].reading_514.counts << ',' << recs[k].reading_635.counts << ','
                            << csv::format_double(raw[k]) << ',' << csv::format_double(norm[k]) << '\n';
                      }
                  }));
    }
    out.write("config.json", to_json(cfg));
    return out.finish();
}

RunManifest cmd_analyze(const ExperimentConfig& cfg, const std::string& scan_csv, const std::string& oracle_dir, bool plots) {
    cfg.validate();
    auto map = scanner::read_csv(scan_csv);
    if (!oracle_dir.empty() && fs::exists(oracle_dir)) scanner::read_oracles(oracle_dir, map);
    const auto result = analysis::analyze_scan(map, cfg.analysis);

    OutputSet out(cfg, "analyze");
    out.write("ratio_map.csv", render([&](std::ostream& o) { analysis::write_csv(o, result.map, result.predicted); }));
    out.write("roc.csv", render([&](std::ostream& o) { analysis::write_csv(o, result.curve); }));
    out.write("report.json", analysis::summary_json(result.summary));
    if (plots) {
        out.write("ratio_map.svg", ratio_map_svg(result.map, result.predicted));
        out.write("roc.svg", roc_svg(result.curve));
    }
    return out.finish();
}

std::string cmd_report(const ExperimentConfig& cfg, bool plots) {
    const fs::path root(cfg.output_dir);
    std::vector<bool> predicted;
    std::istringstream map_in(read_file(root / "ratio_map.csv"));
    const auto map = analysis::read_ratio_csv(map_in, &predicted);
    std::istringstream roc_in(read_file(root / "roc.csv"));
    const auto curve = analysis::read_roc_csv(roc_in);
    json report;
    try {
        report = json::parse(read_file(root / "report.json"));
    } catch (const json::parse_error& e) {
        throw DataError(std::string("report.json: ") + e.what());
    }

    std::ostringstream text;
    text << "cells                " << map.size() << " (" << map.rows << " x " << map.cols << ")\n";
    for (const char* key : {"truth_positive_cells", "auc", "sensitivity", "specificity", "optimum_threshold",
                            "margin_threshold", "margin_sensitivity", "margin_specificity", "r_s", "r_s_healthy"}) {
        if (!report.contains(key)) throw DataError(std::string("report.json: missing field '") + key + "'");
        std::string label = key;
        label.resize(std::max<std::size_t>(label.size() + 1, 21), ' ');
        text << label << report[key].dump() << "\n";
    }
    text << "roc points           " << curve.points.size() << " (auc from curve " << csv::format_double(curve.auc) << ")\n";

    if (plots) {
        auto write = [&](const std::string& name, const std::string& content) {
            std::ofstream o(root / name, std::ios::binary);
            if (!o) throw DataError("cannot write '" + (root / name).string() + "'");
            o << content;
        };
        write("ratio_map.svg", ratio_map_svg(map, predicted));
        write("roc.svg", roc_svg(curve));
    }
    return text.str();
}

// ---------------------------------------------------------------------------
// Plots

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

std::string ratio_map_svg(const analysis::RatioMap& m, const std::vector<bool>& predicted) {
    if (m.size() == 0 || m.cols == 0) throw DataError("ratio map is empty");
    constexpr double cell = 24.0;
    constexpr double pad = 10.0;
    const double w = 2 * pad + cell * static_cast<double>(m.cols);
    const double h = 2 * pad + cell * static_cast<double>(m.rows) + 20.0;
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w) << "\" height=\"" << fmt(h) << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t k = 0; k < m.size(); ++k) {
        const std::size_t r = k / m.cols;
        const std::size_t c = k % m.cols;
        // Row 0 is the smallest y; draw it at the bottom.
        const double x = pad + cell * static_cast<double>(c);
        const double y = pad + cell * static_cast<double>(m.rows - 1 - r);
        const double v = std::clamp(m.normalized_ratio[k], 0.0, 1.0);
        const int red = static_cast<int>(std::lround(40 + 215 * v));
        const int blue = static_cast<int>(std::lround(60 + 60 * (1 - v)));
        o << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(cell) << "\" height=\"" << fmt(cell)
          << "\" fill=\"rgb(" << red << ",30," << blue << ")\"";
        if (k < predicted.size() && predicted[k]) o << " stroke=\"white\" stroke-width=\"2\"";
        o << "/>\n";
        if (k < m.truth.size() && m.truth[k]) {
            o << "<circle cx=\"" << fmt(x + cell / 2) << "\" cy=\"" << fmt(y + cell / 2) << "\" r=\"3\" fill=\"yellow\"/>\n";
        }
    }
    o << "<text x=\"" << fmt(pad) << "\" y=\"" << fmt(h - 6) << "\" font-size=\"11\" font-family=\"sans-serif\">"
      << "normalized ratio; outline = predicted, dot = truth</text>\n";
    o << "</svg>\n";
    return o.str();
}

std::string roc_svg(const analysis::RocCurve& c) {
    constexpr double size = 300.0;
    constexpr double pad = 40.0;
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(size + 2 * pad) << "\" height=\""
      << fmt(size + 2 * pad) << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<rect x=\"" << fmt(pad) << "\" y=\"" << fmt(pad) << "\" width=\"" << fmt(size) << "\" height=\"" << fmt(size)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << fmt(pad) << "\" y1=\"" << fmt(pad + size) << "\" x2=\"" << fmt(pad + size) << "\" y2=\""
      << fmt(pad) << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
    o << "<polyline fill=\"none\" stroke=\"crimson\" stroke-width=\"2\" points=\"";
    for (const auto& p : c.points) o << fmt(pad + p.fpr * size) << ',' << fmt(pad + (1 - p.tpr) * size) << ' ';
    o << "\"/>\n";
    o << "<text x=\"" << fmt(pad) << "\" y=\"" << fmt(pad - 10) << "\" font-size=\"12\" font-family=\"sans-serif\">AUC "
      << csv::format_double(c.auc) << "</text>\n";
    o << "<text x=\"" << fmt(pad + size / 2 - 40) << "\" y=\"" << fmt(pad + size + 25)
      << "\" font-size=\"11\" font-family=\"sans-serif\">false positive rate</text>\n";
    o << "</svg>\n";
    return o.str();
}

}  // namespace fluorosim::experiment
