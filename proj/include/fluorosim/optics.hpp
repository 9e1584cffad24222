#pragma once

#include "fluorosim/random.hpp"
#include "fluorosim/spectral.hpp"

#include <string>

namespace fluorosim::optics {

enum class FilterKind { bandpass, longpass };

// Parametric filter transmission. Every curve sits on an out-of-band floor of
// peak_transmission * 10^-od_floor, so leakage is never exactly zero.
struct FilterSpec {
    FilterKind kind = FilterKind::bandpass;
    double center_or_cutoff = 405.0;  // nm
    double fwhm = 10.0;               // nm, bandpass only
    double peak_transmission = 1.0;
    double od_floor = 2.4;
    double edge_width = 5.0;  // nm, logistic edge of a longpass

    static FilterSpec bandpass(double center, double fwhm, double peak, double od_floor);
    static FilterSpec longpass(double cutoff, double peak, double od_floor, double edge_width = 5.0);

    void validate() const;
};

double leakage_from_od(double od);
double od_from_leakage(double leakage);

double transmission(const FilterSpec& f, double lambda);
spectral::Spectrum apply_filter(const spectral::Spectrum& s, const FilterSpec& f);

enum class WindowMaterial { diamond, glass };

std::string to_string(WindowMaterial m);
WindowMaterial window_material_from_string(const std::string& name);

// Tissue-contact window. Base transmission is a two-plateau curve split at
// split_nm; fouling scales it by a wavelength-flat factor per contact.
struct WindowModel {
    WindowMaterial material = WindowMaterial::diamond;
    double base_transmission_green = 0.68;
    double base_transmission_red = 0.75;
    double fouling_mean = 0.90;
    double fouling_sd = 0.08;
    double split_nm = 570.0;

    static WindowModel diamond();
    static WindowModel glass();
    static WindowModel for_material(WindowMaterial m);

    double base_transmission(double lambda) const {
        return lambda < split_nm ? base_transmission_green : base_transmission_red;
    }
    void validate() const;
};

struct WindowState {
    WindowModel model = WindowModel::diamond();
    double current_attenuation = 1.0;  // T / T0, 1 = pristine

    void validate() const;
};

spectral::Spectrum apply_window(const spectral::Spectrum& s, const WindowState& w);

// Location and scale of a normal whose truncation to (0, 1] has the given
// mean and standard deviation. Throws std::invalid_argument if no such normal
// exists (the moments are not attainable on the unit interval).
struct TruncatedNormal {
    double mu = 0.0;
    double sigma = 0.0;

    double mean() const;
    double sd() const;
};
TruncatedNormal unit_truncated_normal(double mean, double sd);

// One tissue contact: draws a new attenuation from a normal truncated to
// (0, 1] whose mean and sd equal fouling_mean and fouling_sd. The input state
// is not modified.
WindowState foul_window(const WindowState& w, RandomStream& rng);

// Excitation source: a primary line plus a broad secondary shoulder.
struct LedModel {
    spectral::PeakModel primary{405.0, 15.0, 1.0};
    double secondary_center = 550.0;
    double secondary_fwhm = 100.0;
    double secondary_fraction = 0.05;

    spectral::Spectrum spectrum(const spectral::WavelengthGrid& grid) const;
    void validate() const;
};

}  // namespace fluorosim::optics
