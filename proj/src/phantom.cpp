#include "fluorosim/phantom.hpp"

#include "fluorosim/csv.hpp"
#include "fluorosim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace fluorosim::phantom {

void PhantomConfig::validate() const {
    if (!(width > 0.0 && height > 0.0)) throw std::invalid_argument("phantom: field dimensions must be positive");
    if (!(cell > 0.0) || cell > std::min(width, height)) throw std::invalid_argument("phantom: invalid cell size");
    if (!(tumor_radius > 0.0)) throw std::invalid_argument("phantom: tumour radius must be positive");
    if (!(margin_sigma >= 0.0)) throw std::invalid_argument("phantom: margin_sigma must be >= 0");
    if (!(autofluor_amp >= 0.0) || !(ppix_peak_amp >= 0.0)) throw std::invalid_argument("phantom: amplitudes must be >= 0");
    if (!(heterogeneity >= 0.0 && heterogeneity < 1.0)) throw std::invalid_argument("phantom: heterogeneity must lie in [0, 1)");
    if (!(truth_fraction > 0.0 && truth_fraction <= 1.0)) throw std::invalid_argument("phantom: truth_fraction must lie in (0, 1]");
    if (center_ratio_target && !(*center_ratio_target >= 0.0)) {
        throw std::invalid_argument("phantom: center_ratio_target must be >= 0");
    }
    if (tumor_center_x - tumor_radius < 0.0 || tumor_center_x + tumor_radius > width ||
        tumor_center_y - tumor_radius < 0.0 || tumor_center_y + tumor_radius > height) {
        throw std::invalid_argument("phantom: tumour disc extends outside the field");
    }
}

TissueField::TissueField(std::size_t nx, std::size_t ny, double cell)
    : nx_(nx), ny_(ny), cell_(cell), autofluor_(nx * ny, 0.0), ppix_(nx * ny, 0.0), truth_(nx * ny, 0) {
    if (nx == 0 || ny == 0) throw std::invalid_argument("tissue field: empty grid");
    if (!(cell > 0.0)) throw std::invalid_argument("tissue field: cell must be positive");
}

void TissueField::set_autofluor(std::size_t i, std::size_t j, double v) {
    if (!(v >= 0.0)) throw std::invalid_argument("tissue field: amplitudes must be >= 0");
    autofluor_[index(i, j)] = v;
}

void TissueField::set_ppix(std::size_t i, std::size_t j, double v) {
    if (!(v >= 0.0)) throw std::invalid_argument("tissue field: amplitudes must be >= 0");
    ppix_[index(i, j)] = v;
}

std::size_t TissueField::truth_count() const {
    return static_cast<std::size_t>(std::count(truth_.begin(), truth_.end(), 1));
}

void TissueField::derive_truth(double fraction) {
    const double peak = *std::max_element(ppix_.begin(), ppix_.end());
    for (std::size_t k = 0; k < ppix_.size(); ++k) truth_[k] = (peak > 0.0 && ppix_[k] >= fraction * peak) ? 1 : 0;
}

std::vector<double> gaussian_blur(const std::vector<double>& values, std::size_t nx, std::size_t ny, double sigma_cells) {
    if (values.size() != nx * ny) throw std::invalid_argument("gaussian_blur: size mismatch");
    if (sigma_cells <= 0.0) return values;

    const auto half = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma_cells));
    std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
    double sum = 0.0;
    for (std::ptrdiff_t k = -half; k <= half; ++k) {
        const double x = static_cast<double>(k) / sigma_cells;
        sum += kernel[static_cast<std::size_t>(k + half)] = std::exp(-0.5 * x * x);
    }
    for (double& w : kernel) w /= sum;

    const auto sx = static_cast<std::ptrdiff_t>(nx);
    const auto sy = static_cast<std::ptrdiff_t>(ny);
    std::vector<double> tmp(values.size(), 0.0);
    for (std::ptrdiff_t j = 0; j < sy; ++j) {
        for (std::ptrdiff_t i = 0; i < sx; ++i) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -half; k <= half; ++k) {
                const std::ptrdiff_t ii = i + k;
                if (ii < 0 || ii >= sx) continue;
                acc += kernel[static_cast<std::size_t>(k + half)] * values[static_cast<std::size_t>(j * sx + ii)];
            }
            tmp[static_cast<std::size_t>(j * sx + i)] = acc;
        }
    }
    std::vector<double> out(values.size(), 0.0);
    for (std::ptrdiff_t j = 0; j < sy; ++j) {
        for (std::ptrdiff_t i = 0; i < sx; ++i) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -half; k <= half; ++k) {
                const std::ptrdiff_t jj = j + k;
                if (jj < 0 || jj >= sy) continue;
                acc += kernel[static_cast<std::size_t>(k + half)] * tmp[static_cast<std::size_t>(jj * sx + i)];
            }
            // Blurring non-negative data cannot go negative; strip rounding dust.
            out[static_cast<std::size_t>(j * sx + i)] = std::max(0.0, acc);
        }
    }
    return out;
}

namespace {

double interpolate(const TissueField& f, const std::vector<double>& data, double x, double y) {
    const double u = std::clamp(x / f.cell() - 0.5, 0.0, static_cast<double>(f.nx() - 1));
    const double v = std::clamp(y / f.cell() - 0.5, 0.0, static_cast<double>(f.ny() - 1));
    const auto i0 = std::min(static_cast<std::size_t>(u), f.nx() > 1 ? f.nx() - 2 : 0);
    const auto j0 = std::min(static_cast<std::size_t>(v), f.ny() > 1 ? f.ny() - 2 : 0);
    const std::size_t i1 = std::min(i0 + 1, f.nx() - 1);
    const std::size_t j1 = std::min(j0 + 1, f.ny() - 1);
    const double tx = u - static_cast<double>(i0);
    const double ty = v - static_cast<double>(j0);
    const double a = data[f.index(i0, j0)] * (1.0 - tx) + data[f.index(i1, j0)] * tx;
    const double b = data[f.index(i0, j1)] * (1.0 - tx) + data[f.index(i1, j1)] * tx;
    return a * (1.0 - ty) + b * ty;
}

}  // namespace

std::pair<double, double> emission_at(const TissueField& f, double x, double y) {
    if (!(x >= 0.0 && x <= f.width() && y >= 0.0 && y <= f.height())) {
        throw std::invalid_argument("emission_at: point outside the tissue field");
    }
    return {interpolate(f, f.autofluor_data(), x, y), interpolate(f, f.ppix_data(), x, y)};
}

SpotAverage spot_average(const TissueField& f, double x0, double y0, double x1, double y1) {
    const double tol = 1e-9 * f.cell();
    if (!(x0 < x1 && y0 < y1)) throw std::invalid_argument("spot_average: empty rectangle");
    if (x0 < -tol || y0 < -tol || x1 > f.width() + tol || y1 > f.height() + tol) {
        throw std::invalid_argument("spot_average: spot extends outside the tissue field");
    }
    const double c = f.cell();
    const auto i_lo = static_cast<std::size_t>(std::max(0.0, std::floor(x0 / c)));
    const auto j_lo = static_cast<std::size_t>(std::max(0.0, std::floor(y0 / c)));
    const auto i_hi = std::min(f.nx(), static_cast<std::size_t>(std::ceil(x1 / c)));
    const auto j_hi = std::min(f.ny(), static_cast<std::size_t>(std::ceil(y1 / c)));

    SpotAverage out;
    double area = 0.0;
    for (std::size_t j = j_lo; j < j_hi; ++j) {
        const double oy = std::min(y1, (static_cast<double>(j) + 1.0) * c) - std::max(y0, static_cast<double>(j) * c);
        if (oy <= 0.0) continue;
        for (std::size_t i = i_lo; i < i_hi; ++i) {
            const double ox = std::min(x1, (static_cast<double>(i) + 1.0) * c) - std::max(x0, static_cast<double>(i) * c);
            if (ox <= 0.0) continue;
            const double w = ox * oy;
            area += w;
            out.autofluor += w * f.autofluor(i, j);
            out.ppix += w * f.ppix(i, j);
            out.truth_fraction += f.truth(i, j) ? w : 0.0;
        }
    }
    out.autofluor /= area;
    out.ppix /= area;
    out.truth_fraction /= area;
    return out;
}

Phantom generate_phantom(const PhantomConfig& cfg, RandomStream& rng, const spectral::EmissionModel& em,
                         const spectral::WavelengthGrid& grid, const analysis::FitOptions& fit,
                         const Instrument& instrument) {
    cfg.validate();
    const auto nx = static_cast<std::size_t>(std::llround(cfg.width / cfg.cell));
    const auto ny = static_cast<std::size_t>(std::llround(cfg.height / cfg.cell));
    TissueField field(nx, ny, cfg.cell);

    // Draw order is fixed (row-major) so a seed always yields the same field.
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const double u = rng.uniform();
            field.set_autofluor(i, j, cfg.autofluor_amp * (1.0 + cfg.heterogeneity * (2.0 * u - 1.0)));
        }
    }

    std::vector<double> disc(nx * ny, 0.0);
    const double r2 = cfg.tumor_radius * cfg.tumor_radius;
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const double dx = field.x_center(i) - cfg.tumor_center_x;
            const double dy = field.y_center(j) - cfg.tumor_center_y;
            if (dx * dx + dy * dy <= r2) disc[field.index(i, j)] = 1.0;
        }
    }
    const auto unit = gaussian_blur(disc, nx, ny, cfg.margin_sigma / cfg.cell);

    double amplitude = cfg.ppix_peak_amp;
    if (cfg.center_ratio_target && *cfg.center_ratio_target == 0.0) {
        amplitude = 0.0;
    } else if (cfg.center_ratio_target) {
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) field.set_ppix(i, j, unit[field.index(i, j)]);
        }
        const auto [a_c, unit_c] = emission_at(field, cfg.tumor_center_x, cfg.tumor_center_y);
        // The spectrometer ratio is affine in the PpIX amplitude (the fit never
        // sees the PpIX band), so two evaluations pin it down.
        const double probe = std::max(a_c, 1e-12);
        auto observe = [&](double p) {
            auto s = spectral::synthesize_emission(a_c, p, em, grid);
            return analysis::spectral_ratio(instrument ? instrument(s) : s, fit);
        };
        const double r0 = observe(0.0);
        const double r1 = observe(probe);
        const double p_center = probe * (*cfg.center_ratio_target - r0) / (r1 - r0);
        amplitude = std::max(0.0, p_center / unit_c);
    }
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) field.set_ppix(i, j, amplitude * unit[field.index(i, j)]);
    }
    field.derive_truth(cfg.truth_fraction);
    return {std::move(field), amplitude};
}

void write_csv(std::ostream& out, const TissueField& f) {
    out << "x_mm,y_mm,autofluor,ppix,truth\n";
    for (std::size_t j = 0; j < f.ny(); ++j) {
        for (std::size_t i = 0; i < f.nx(); ++i) {
            out << csv::format_double(f.x_center(i)) << ',' << csv::format_double(f.y_center(j)) << ','
                << csv::format_double(f.autofluor(i, j)) << ',' << csv::format_double(f.ppix(i, j)) << ','
                << (f.truth(i, j) ? 1 : 0) << '\n';
        }
    }
}

void write_csv(const std::string& path, const TissueField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_csv(out, f);
}

TissueField read_csv(std::istream& in) {
    const auto t = csv::Table::read(in, {"x_mm", "y_mm", "autofluor", "ppix", "truth"});
    if (t.rows() == 0) throw DataError("tissue field CSV has no rows");
    const double y0 = t.number(0, 1);
    std::size_t nx = 0;
    while (nx < t.rows() && t.number(nx, 1) == y0) ++nx;
    if (t.rows() % nx != 0) throw DataError("tissue field CSV is not a full rectangular grid");
    const std::size_t ny = t.rows() / nx;
    const double cell = 2.0 * t.number(0, 0);
    TissueField f(nx, ny, cell);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t r = j * nx + i;
            f.set_autofluor(i, j, t.number(r, 2));
            f.set_ppix(i, j, t.number(r, 3));
            f.set_truth(i, j, t.boolean(r, 4));
        }
    }
    return f;
}

}  // namespace fluorosim::phantom
