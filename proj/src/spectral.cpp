#include "fluorosim/spectral.hpp"

#include "fluorosim/csv.hpp"
#include "fluorosim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace fluorosim::spectral {

namespace {
// Absorbs representation error in (max - min) / step.
constexpr double kGridSlack = 1e-9;
}  // namespace

WavelengthGrid::WavelengthGrid(double lambda_min, double lambda_max, double step)
    : lambda_min_(lambda_min), lambda_max_(lambda_max), step_(step), size_(0) {
    if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("wavelength grid: step must be positive");
    if (!(lambda_min < lambda_max)) throw std::invalid_argument("wavelength grid: lambda_min must be below lambda_max");
    size_ = static_cast<std::size_t>(std::floor((lambda_max - lambda_min) / step + kGridSlack)) + 1;
    if (size_ < 2) throw std::invalid_argument("wavelength grid: fewer than two samples");
}

bool WavelengthGrid::contains(double lambda) const {
    const double tol = step_ * kGridSlack;
    return lambda >= lambda_min_ - tol && lambda <= last() + tol;
}

WavelengthGrid build_grid(double lambda_min, double lambda_max, double step) {
    return WavelengthGrid(lambda_min, lambda_max, step);
}

WavelengthGrid default_grid() { return WavelengthGrid(400.0, 750.0, 1.0); }

Spectrum::Spectrum(WavelengthGrid grid) : grid_(grid), values_(grid.size(), 0.0) {}

Spectrum::Spectrum(WavelengthGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw std::invalid_argument("spectrum: value count does not match grid");
    for (double v : values_) {
        if (!(v >= 0.0)) throw std::invalid_argument("spectrum: values must be non-negative");
    }
}

void Spectrum::set(std::size_t i, double value) {
    if (!(value >= 0.0)) throw std::invalid_argument("spectrum: values must be non-negative");
    values_.at(i) = value;
}

double Spectrum::at(double lambda) const {
    if (!grid_.contains(lambda)) throw std::invalid_argument("spectrum: wavelength outside grid");
    const double pos = std::clamp((lambda - grid_.lambda_min()) / grid_.step(), 0.0, static_cast<double>(size() - 1));
    const auto i = std::min(static_cast<std::size_t>(pos), size() - 2);
    const double t = pos - static_cast<double>(i);
    return values_[i] * (1.0 - t) + values_[i + 1] * t;
}

Spectrum& Spectrum::operator+=(const Spectrum& other) {
    require_same_grid(*this, other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

Spectrum& Spectrum::operator*=(double factor) {
    if (!(factor >= 0.0)) throw std::invalid_argument("spectrum: scale factor must be non-negative");
    for (double& v : values_) v *= factor;
    return *this;
}

Spectrum operator+(Spectrum lhs, const Spectrum& rhs) { return lhs += rhs; }
Spectrum operator*(Spectrum lhs, double factor) { return lhs *= factor; }
Spectrum operator*(double factor, Spectrum rhs) { return rhs *= factor; }

void require_same_grid(const Spectrum& a, const Spectrum& b) {
    if (!(a.grid() == b.grid())) throw std::invalid_argument("spectra are sampled on different grids");
}

double PeakModel::value(double lambda) const {
    const double s = sigma();
    const double d = lambda - center;
    return amplitude * std::exp(-d * d / (2.0 * s * s));
}

void PeakModel::validate() const {
    if (!(fwhm > 0.0)) throw std::invalid_argument("peak: fwhm must be positive");
    if (!(amplitude >= 0.0)) throw std::invalid_argument("peak: amplitude must be non-negative");
}

void EmissionModel::validate() const {
    autofluor.validate();
    ppix_primary.validate();
    if (!(ppix_secondary_fraction >= 0.0 && ppix_secondary_fraction <= 1.0)) {
        throw std::invalid_argument("emission: secondary PpIX fraction must lie in [0, 1]");
    }
    ppix_secondary().validate();
}

Spectrum evaluate_peak(const PeakModel& peak, const WavelengthGrid& grid) {
    peak.validate();
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = peak.value(grid.wavelength(i));
    return Spectrum(grid, std::move(v));
}

Spectrum synthesize_emission(double a_amp, double p_amp, const EmissionModel& model, const WavelengthGrid& grid) {
    if (!(a_amp >= 0.0) || !(p_amp >= 0.0)) throw std::invalid_argument("emission amplitudes must be non-negative");
    model.validate();
    const PeakModel secondary = model.ppix_secondary();
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double l = grid.wavelength(i);
        v[i] = a_amp * model.autofluor.value(l) + p_amp * (model.ppix_primary.value(l) + secondary.value(l));
    }
    return Spectrum(grid, std::move(v));
}

double integrate_band(const Spectrum& s, double lo, double hi) {
    const auto& g = s.grid();
    if (!(lo < hi)) throw std::invalid_argument("integrate_band: lo must be below hi");
    if (!g.contains(lo) || !g.contains(hi)) throw std::invalid_argument("integrate_band: band outside grid");
    lo = std::max(lo, g.lambda_min());
    hi = std::min(hi, g.last());

    // Interior samples strictly inside (lo, hi), plus interpolated end points.
    const double step = g.step();
    const double first_pos = (lo - g.lambda_min()) / step;
    const double last_pos = (hi - g.lambda_min()) / step;
    auto i = static_cast<std::size_t>(std::floor(first_pos)) + 1;
    const auto j_end = static_cast<std::size_t>(std::ceil(last_pos));  // exclusive

    double total = 0.0;
    double prev_l = lo;
    double prev_v = s.at(lo);
    for (; i < j_end && i < s.size(); ++i) {
        const double l = g.wavelength(i);
        if (l <= lo) continue;
        total += 0.5 * (prev_v + s[i]) * (l - prev_l);
        prev_l = l;
        prev_v = s[i];
    }
    total += 0.5 * (prev_v + s.at(hi)) * (hi - prev_l);
    return total;
}

double integrate(const Spectrum& s) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) total += 0.5 * (s[i] + s[i + 1]);
    return total * s.grid().step();
}

void write_csv(std::ostream& out, const Spectrum& s) {
    out << "wavelength_nm,value\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out << csv::format_double(s.grid().wavelength(i)) << ',' << csv::format_double(s[i]) << '\n';
    }
}

void write_csv(const std::string& path, const Spectrum& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_csv(out, s);
}

Spectrum read_csv(std::istream& in) {
    const auto table = csv::Table::read(in, {"wavelength_nm", "value"});
    if (table.rows() < 2) throw DataError("spectrum CSV needs at least two rows");
    std::vector<double> wl(table.rows());
    std::vector<double> values(table.rows());
    for (std::size_t r = 0; r < table.rows(); ++r) {
        wl[r] = table.number(r, 0);
        values[r] = table.number(r, 1);
        if (r > 0 && !(wl[r] > wl[r - 1])) throw DataError("column 'wavelength_nm': wavelengths must be strictly increasing");
        if (!(values[r] >= 0.0)) throw DataError("column 'value': negative spectral density");
    }
    const double step = wl[1] - wl[0];
    for (std::size_t r = 1; r < wl.size(); ++r) {
        if (std::abs((wl[r] - wl[r - 1]) - step) > 1e-6 * step) {
            throw DataError("column 'wavelength_nm': samples are not uniformly spaced");
        }
    }
    WavelengthGrid grid(wl.front(), wl.back(), step);
    if (grid.size() != wl.size()) throw DataError("column 'wavelength_nm': inconsistent sample count");
    return Spectrum(grid, std::move(values));
}

Spectrum read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read_csv(in);
}

}  // namespace fluorosim::spectral
