#include "fluorosim/optics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fluorosim::optics {

namespace {
// Rejection attempts before falling back to clamping in foul_window.
constexpr int kMaxTruncationDraws = 1000;
}  // namespace

FilterSpec FilterSpec::bandpass(double center, double fwhm, double peak, double od_floor) {
    FilterSpec f;
    f.kind = FilterKind::bandpass;
    f.center_or_cutoff = center;
    f.fwhm = fwhm;
    f.peak_transmission = peak;
    f.od_floor = od_floor;
    return f;
}

FilterSpec FilterSpec::longpass(double cutoff, double peak, double od_floor, double edge_width) {
    FilterSpec f;
    f.kind = FilterKind::longpass;
    f.center_or_cutoff = cutoff;
    f.peak_transmission = peak;
    f.od_floor = od_floor;
    f.edge_width = edge_width;
    return f;
}

void FilterSpec::validate() const {
    if (!(peak_transmission > 0.0 && peak_transmission <= 1.0)) {
        throw std::invalid_argument("filter: peak transmission must lie in (0, 1]");
    }
    if (!(od_floor >= 0.0) || !std::isfinite(od_floor)) throw std::invalid_argument("filter: od_floor must be >= 0");
    if (kind == FilterKind::bandpass && !(fwhm > 0.0)) throw std::invalid_argument("filter: bandpass fwhm must be positive");
    if (kind == FilterKind::longpass && !(edge_width >= 0.0)) {
        throw std::invalid_argument("filter: longpass edge width must be >= 0");
    }
}

double leakage_from_od(double od) {
    if (!(od >= 0.0)) throw std::invalid_argument("optical density must be non-negative");
    return std::pow(10.0, -od);
}

double od_from_leakage(double leakage) {
    if (!(leakage > 0.0 && leakage <= 1.0)) throw std::invalid_argument("leakage must lie in (0, 1]");
    return -std::log10(leakage);
}

double transmission(const FilterSpec& f, double lambda) {
    const double floor = leakage_from_od(f.od_floor);
    double shape = 0.0;
    if (f.kind == FilterKind::bandpass) {
        const double sigma = f.fwhm / spectral::kFwhmPerSigma;
        const double d = lambda - f.center_or_cutoff;
        shape = std::exp(-d * d / (2.0 * sigma * sigma));
    } else if (f.edge_width == 0.0) {
        shape = lambda >= f.center_or_cutoff ? 1.0 : 0.0;
    } else {
        shape = 1.0 / (1.0 + std::exp(-(lambda - f.center_or_cutoff) / f.edge_width));
    }
    return f.peak_transmission * (floor + (1.0 - floor) * shape);
}

spectral::Spectrum apply_filter(const spectral::Spectrum& s, const FilterSpec& f) {
    f.validate();
    spectral::Spectrum out(s.grid());
    for (std::size_t i = 0; i < s.size(); ++i) out.set(i, s[i] * transmission(f, s.grid().wavelength(i)));
    return out;
}

std::string to_string(WindowMaterial m) { return m == WindowMaterial::diamond ? "diamond" : "glass"; }

WindowMaterial window_material_from_string(const std::string& name) {
    if (name == "diamond") return WindowMaterial::diamond;
    if (name == "glass") return WindowMaterial::glass;
    throw std::invalid_argument("unknown window material '" + name + "'");
}

WindowModel WindowModel::diamond() { return {WindowMaterial::diamond, 0.68, 0.75, 0.90, 0.08, 570.0}; }

WindowModel WindowModel::glass() { return {WindowMaterial::glass, 0.89, 0.92, 0.60, 0.17, 570.0}; }

WindowModel WindowModel::for_material(WindowMaterial m) { return m == WindowMaterial::diamond ? diamond() : glass(); }

void WindowModel::validate() const {
    auto fraction = [](double v, const char* name) {
        if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument(std::string("window: ") + name + " must lie in (0, 1]");
    };
    fraction(base_transmission_green, "base_transmission_green");
    fraction(base_transmission_red, "base_transmission_red");
    fraction(fouling_mean, "fouling_mean");
    if (!(fouling_sd >= 0.0 && fouling_sd <= 1.0)) throw std::invalid_argument("window: fouling_sd must lie in [0, 1]");
    if (fouling_sd > 0.0) {
        try {
            (void)unit_truncated_normal(fouling_mean, fouling_sd);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(std::string("window: fouling_mean/fouling_sd not attainable on (0, 1]: ") + e.what());
        }
    }
}

void WindowState::validate() const {
    model.validate();
    if (!(current_attenuation > 0.0 && current_attenuation <= 1.0)) {
        throw std::invalid_argument("window: current attenuation must lie in (0, 1]");
    }
}

spectral::Spectrum apply_window(const spectral::Spectrum& s, const WindowState& w) {
    w.validate();
    spectral::Spectrum out(s.grid());
    for (std::size_t i = 0; i < s.size(); ++i) {
        out.set(i, s[i] * w.model.base_transmission(s.grid().wavelength(i)) * w.current_attenuation);
    }
    return out;
}

namespace {

double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846); }
double cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

double TruncatedNormal::mean() const {
    const double a = -mu / sigma;
    const double b = (1.0 - mu) / sigma;
    return mu + sigma * (phi(a) - phi(b)) / (cdf(b) - cdf(a));
}

double TruncatedNormal::sd() const {
    const double a = -mu / sigma;
    const double b = (1.0 - mu) / sigma;
    const double z = cdf(b) - cdf(a);
    const double d = (phi(a) - phi(b)) / z;
    return sigma * std::sqrt(std::max(0.0, 1.0 + (a * phi(a) - b * phi(b)) / z - d * d));
}

TruncatedNormal unit_truncated_normal(double mean, double sd) {
    if (!(mean > 0.0 && mean < 1.0 && sd > 0.0)) {
        throw std::invalid_argument("truncated normal: need 0 < mean < 1 and sd > 0");
    }
    // Fixed-point iteration: shift the location by the mean error and scale the
    // width by the sd ratio. Converges quickly while truncation is moderate.
    TruncatedNormal t{mean, sd};
    for (int it = 0; it < 500; ++it) {
        const double m = t.mean();
        const double s = t.sd();
        t.mu += mean - m;
        t.sigma *= sd / s;
        if (!std::isfinite(t.mu) || !(t.sigma > 0.0) || t.sigma > 1e3) break;
        if (std::abs(m - mean) < 1e-13 && std::abs(s - sd) < 1e-13) return t;
    }
    if (std::abs(t.mean() - mean) < 1e-9 && std::abs(t.sd() - sd) < 1e-9) return t;
    throw std::invalid_argument("truncated normal: mean/sd not attainable on (0, 1]");
}

WindowState foul_window(const WindowState& w, RandomStream& rng) {
    w.validate();
    WindowState next = w;
    const double mean = w.model.fouling_mean;
    const double sd = w.model.fouling_sd;
    if (sd == 0.0) {
        next.current_attenuation = mean;
        return next;
    }
    const auto t = unit_truncated_normal(mean, sd);
    for (int attempt = 0; attempt < kMaxTruncationDraws; ++attempt) {
        const double draw = rng.normal(t.mu, t.sigma);
        if (draw > 0.0 && draw <= 1.0) {
            next.current_attenuation = draw;
            return next;
        }
    }
    next.current_attenuation = std::clamp(mean, 1e-6, 1.0);
    return next;
}

spectral::Spectrum LedModel::spectrum(const spectral::WavelengthGrid& grid) const {
    validate();
    const spectral::PeakModel shoulder{secondary_center, secondary_fwhm, primary.amplitude * secondary_fraction};
    return spectral::evaluate_peak(primary, grid) + spectral::evaluate_peak(shoulder, grid);
}

void LedModel::validate() const {
    primary.validate();
    if (!(secondary_fwhm > 0.0)) throw std::invalid_argument("led: secondary fwhm must be positive");
    if (!(secondary_fraction >= 0.0 && secondary_fraction <= 1.0)) {
        throw std::invalid_argument("led: secondary fraction must lie in [0, 1]");
    }
}

}  // namespace fluorosim::optics
