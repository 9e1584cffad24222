#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fluorosim::spectral {

// FWHM = kFwhmPerSigma * sigma for a Gaussian.
inline constexpr double kFwhmPerSigma = 2.3548200450309493;  // 2*sqrt(2 ln 2)

// Uniform wavelength sampling in nm. Samples run from lambda_min in steps of
// `step`; the last sample never exceeds lambda_max.
class WavelengthGrid {
public:
    WavelengthGrid(double lambda_min, double lambda_max, double step);

    double lambda_min() const { return lambda_min_; }
    double lambda_max() const { return lambda_max_; }
    double step() const { return step_; }
    std::size_t size() const { return size_; }

    double wavelength(std::size_t i) const { return lambda_min_ + step_ * static_cast<double>(i); }
    double last() const { return wavelength(size_ - 1); }
    bool contains(double lambda) const;

    bool operator==(const WavelengthGrid&) const = default;

private:
    double lambda_min_;
    double lambda_max_;
    double step_;
    std::size_t size_;
};

WavelengthGrid build_grid(double lambda_min, double lambda_max, double step);
WavelengthGrid default_grid();  // 400-750 nm at 1 nm

// Spectral power density (nW/nm) sampled on a grid.
class Spectrum {
public:
    explicit Spectrum(WavelengthGrid grid);
    Spectrum(WavelengthGrid grid, std::vector<double> values);

    const WavelengthGrid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }

    double operator[](std::size_t i) const { return values_[i]; }
    // Non-negative values only; throws std::invalid_argument otherwise.
    void set(std::size_t i, double value);

    // Linear interpolation between samples; lambda must lie on the grid span.
    double at(double lambda) const;

    Spectrum& operator+=(const Spectrum& other);
    Spectrum& operator*=(double factor);

private:
    WavelengthGrid grid_;
    std::vector<double> values_;
};

Spectrum operator+(Spectrum lhs, const Spectrum& rhs);
Spectrum operator*(Spectrum lhs, double factor);
Spectrum operator*(double factor, Spectrum rhs);

void require_same_grid(const Spectrum& a, const Spectrum& b);

struct PeakModel {
    double center = 0.0;     // nm
    double fwhm = 1.0;       // nm
    double amplitude = 1.0;  // nW/nm at the apex

    double sigma() const { return fwhm / kFwhmPerSigma; }
    double value(double lambda) const;
    void validate() const;
};

// Tissue emission: autofluorescence plus the two PpIX bands. The secondary
// PpIX amplitude is a fraction of the primary one.
struct EmissionModel {
    PeakModel autofluor{510.0, 118.0, 1.0};
    PeakModel ppix_primary{635.0, 14.0, 1.0};
    double ppix_secondary_center = 704.0;
    double ppix_secondary_fwhm = 30.0;
    double ppix_secondary_fraction = 0.2;

    PeakModel ppix_secondary() const {
        return {ppix_secondary_center, ppix_secondary_fwhm, ppix_primary.amplitude * ppix_secondary_fraction};
    }
    void validate() const;
};

Spectrum evaluate_peak(const PeakModel& peak, const WavelengthGrid& grid);

// a_amp scales the autofluorescence peak, p_amp both PpIX peaks.
Spectrum synthesize_emission(double a_amp, double p_amp, const EmissionModel& model, const WavelengthGrid& grid);

// Trapezoidal integral of the density over [lo, hi] (nW). Band edges that fall
// between samples are handled by linear interpolation.
double integrate_band(const Spectrum& s, double lo, double hi);
double integrate(const Spectrum& s);

// Two-column CSV: header `wavelength_nm,value`, one row per sample.
void write_csv(std::ostream& out, const Spectrum& s);
void write_csv(const std::string& path, const Spectrum& s);
Spectrum read_csv(std::istream& in);
Spectrum read_csv(const std::string& path);

}  // namespace fluorosim::spectral
