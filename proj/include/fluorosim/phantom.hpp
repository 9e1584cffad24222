#pragma once

#include "fluorosim/analysis.hpp"
#include "fluorosim/random.hpp"
#include "fluorosim/spectral.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fluorosim::phantom {

// Emission amplitudes are spectral yields: nW/nm of emission per nW of
// excitation reaching the spot. The scanner multiplies by excitation power.
struct PhantomConfig {
    double width = 12.0;   // mm
    double height = 12.0;  // mm
    double cell = 0.1;     // mm
    double tumor_center_x = 6.35;
    double tumor_center_y = 5.75;
    double tumor_radius = 1.2615662610100802;  // sqrt(5 / pi): ~5 mm^2 disc
    double autofluor_amp = 1.5e-3;
    // Disc amplitude used when no ratio target is set.
    double ppix_peak_amp = 7.5e-3;
    double margin_sigma = 0.5;  // mm
    // When set, the disc amplitude is solved so the noiseless spectrometer
    // ratio at the tumour centre equals this value.
    std::optional<double> center_ratio_target = 5.0;
    double heterogeneity = 0.05;  // autofluorescence multiplicative spread, uniform +-h
    double truth_fraction = 0.9;  // truth = ppix >= fraction * max ppix

    void validate() const;
};

class TissueField {
public:
    TissueField(std::size_t nx, std::size_t ny, double cell);

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    double cell() const { return cell_; }
    double width() const { return cell_ * static_cast<double>(nx_); }
    double height() const { return cell_ * static_cast<double>(ny_); }
    double x_center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * cell_; }
    double y_center(std::size_t j) const { return (static_cast<double>(j) + 0.5) * cell_; }

    std::size_t index(std::size_t i, std::size_t j) const { return j * nx_ + i; }
    double autofluor(std::size_t i, std::size_t j) const { return autofluor_[index(i, j)]; }
    double ppix(std::size_t i, std::size_t j) const { return ppix_[index(i, j)]; }
    bool truth(std::size_t i, std::size_t j) const { return truth_[index(i, j)] != 0; }

    void set_autofluor(std::size_t i, std::size_t j, double v);
    void set_ppix(std::size_t i, std::size_t j, double v);
    void set_truth(std::size_t i, std::size_t j, bool v) { truth_[index(i, j)] = v ? 1 : 0; }

    const std::vector<double>& autofluor_data() const { return autofluor_; }
    const std::vector<double>& ppix_data() const { return ppix_; }
    std::size_t truth_count() const;

    // Recomputes truth as ppix >= fraction * max(ppix); all false when ppix is
    // identically zero.
    void derive_truth(double fraction = 0.9);

    bool operator==(const TissueField&) const = default;

private:
    std::size_t nx_;
    std::size_t ny_;
    double cell_;
    std::vector<double> autofluor_;
    std::vector<double> ppix_;
    std::vector<unsigned char> truth_;
};

struct Phantom {
    TissueField field;
    double disc_amplitude = 0.0;  // PpIX amplitude of the disc before blurring
};

// Noiseless instrument applied to a spectrum before the calibration ratio is
// taken (the oracle spectrometer's line shape). Must be linear.
using Instrument = std::function<spectral::Spectrum(const spectral::Spectrum&)>;

Phantom generate_phantom(const PhantomConfig& cfg, RandomStream& rng, const spectral::EmissionModel& em = {},
                         const spectral::WavelengthGrid& grid = spectral::default_grid(),
                         const analysis::FitOptions& fit = {}, const Instrument& instrument = {});

// Bilinear interpolation of (autofluor, ppix) between cell centres. Points
// between the outermost centres and the field edge take the edge value.
std::pair<double, double> emission_at(const TissueField& f, double x, double y);

// Ideal boxcar average of (autofluor, ppix) over an axis-aligned rectangle,
// weighting each field cell by its overlap area. Also returns the overlap
// weighted truth fraction.
struct SpotAverage {
    double autofluor = 0.0;
    double ppix = 0.0;
    double truth_fraction = 0.0;
};
SpotAverage spot_average(const TissueField& f, double x0, double y0, double x1, double y1);

// Separable Gaussian blur with zero padding outside the field.
std::vector<double> gaussian_blur(const std::vector<double>& values, std::size_t nx, std::size_t ny, double sigma_cells);

// CSV: x_mm,y_mm,autofluor,ppix,truth (row-major, y outer).
void write_csv(std::ostream& out, const TissueField& f);
void write_csv(const std::string& path, const TissueField& f);
TissueField read_csv(std::istream& in);

}  // namespace fluorosim::phantom
