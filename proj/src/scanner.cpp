#include "fluorosim/scanner.hpp"

#include "fluorosim/csv.hpp"
#include "fluorosim/errors.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace fluorosim::scanner {

void ScanConfig::validate() const {
    if (!(step > 0.0)) throw std::invalid_argument("scan: step must be positive");
    if (!(spot_width > 0.0 && spot_height > 0.0)) throw std::invalid_argument("scan: spot must be positive");
    if (!(excitation_power >= 0.0)) throw std::invalid_argument("scan: excitation power must be >= 0");
    if (threads == 0) throw std::invalid_argument("scan: threads must be >= 1");
    window.validate();
}

namespace {

void check_footprint(const phantom::TissueField& f, double x, double y, const ScanConfig& sc) {
    const double tol = 1e-9;
    const double hx = 0.5 * sc.spot_width;
    const double hy = 0.5 * sc.spot_height;
    if (x - hx < -tol || y - hy < -tol || x + hx > f.width() + tol || y + hy > f.height() + tol) {
        throw std::invalid_argument("scan footprint leaves the tissue field at (" + csv::format_double(x) + ", " +
                                    csv::format_double(y) + ") mm");
    }
}

}  // namespace

ScanRecord measure_emission(double a_amp, double p_amp, double x, double y, const ScanConfig& sc,
                            const optics::WindowState& window, const OpticalChain& chain, RandomStream& rng) {
    auto emitted = spectral::synthesize_emission(a_amp, p_amp, chain.emission, chain.grid);
    emitted *= sc.excitation_power;
    auto at_chip = optics::apply_window(emitted, window);
    if (chain.emission_filter) at_chip = optics::apply_filter(at_chip, *chain.emission_filter);

    ScanRecord rec;
    rec.x = x;
    rec.y = y;
    rec.window_attenuation = window.current_attenuation;
    rec.reading_514 = detector::read_channel(detector::channel_power(at_chip, chain.ch514), chain.detector, rng, 514);
    rec.reading_635 = detector::read_channel(detector::channel_power(at_chip, chain.ch635), chain.detector, rng, 635);
    if (sc.record_oracle) rec.oracle = detector::spectrometer_read(emitted, chain.spectrometer, rng);
    return rec;
}

ScanRecord measure_spot(const phantom::TissueField& f, double x, double y, const ScanConfig& sc,
                        const OpticalChain& chain, RandomStream& rng) {
    check_footprint(f, x, y, sc);
    const auto avg = phantom::spot_average(f, x - 0.5 * sc.spot_width, y - 0.5 * sc.spot_height,
                                           x + 0.5 * sc.spot_width, y + 0.5 * sc.spot_height);
    const auto window = sc.fouling_per_position ? optics::foul_window(sc.window, rng) : sc.window;
    return measure_emission(avg.autofluor, avg.ppix, x, y, sc, window, chain, rng);
}

namespace {

// Runs body(i) for i in [0, n) on `threads` workers. Work assignment does not
// affect results because each body owns its random stream.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body body) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    for (unsigned t = 0; t < count; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

ScanMap raster_scan(const phantom::TissueField& f, const ScanConfig& sc, const OpticalChain& chain, std::uint64_t seed) {
    sc.validate();
    ScanMap map;
    map.config = sc;
    const double x0 = sc.origin_x.value_or(0.5 * sc.spot_width);
    const double y0 = sc.origin_y.value_or(0.5 * sc.spot_height);
    const double slack = 1e-9;
    map.cols = sc.cols ? sc.cols
                       : static_cast<std::size_t>(std::floor((f.width() - 0.5 * sc.spot_width - x0) / sc.step + slack)) + 1;
    map.rows = sc.rows ? sc.rows
                       : static_cast<std::size_t>(std::floor((f.height() - 0.5 * sc.spot_height - y0) / sc.step + slack)) + 1;

    const std::size_t n = map.rows * map.cols;
    for (std::size_t k = 0; k < n; ++k) {
        check_footprint(f, x0 + static_cast<double>(k % map.cols) * sc.step,
                        y0 + static_cast<double>(k / map.cols) * sc.step, sc);
    }

    map.records.resize(n);
    std::vector<unsigned char> truth(n, 0);
    parallel_for(n, sc.threads, [&](std::size_t k) {
        const double x = x0 + static_cast<double>(k % map.cols) * sc.step;
        const double y = y0 + static_cast<double>(k / map.cols) * sc.step;
        auto rng = RandomStream::derive(seed, stream_domain::raster, k);
        map.records[k] = measure_spot(f, x, y, sc, chain, rng);
        const auto avg = phantom::spot_average(f, x - 0.5 * sc.spot_width, y - 0.5 * sc.spot_height,
                                               x + 0.5 * sc.spot_width, y + 0.5 * sc.spot_height);
        // Ties go to tumour.
        truth[k] = avg.truth_fraction >= 0.5 - 1e-12 ? 1 : 0;
    });
    map.truth.assign(truth.begin(), truth.end());
    return map;
}

std::vector<ScanRecord> line_scan(const phantom::TissueField& f, double x0, double y0, double x1, double y1,
                                  double step, const ScanConfig& sc, const OpticalChain& chain, std::uint64_t seed) {
    sc.validate();
    if (!(step > 0.0)) throw std::invalid_argument("line scan: step must be positive");
    const double length = std::hypot(x1 - x0, y1 - y0);
    const auto count = static_cast<std::size_t>(std::floor(length / step + 1e-9)) + 1;
    const double ux = length > 0.0 ? (x1 - x0) / length : 0.0;
    const double uy = length > 0.0 ? (y1 - y0) / length : 0.0;

    std::vector<ScanRecord> out(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double d = static_cast<double>(k) * step;
        check_footprint(f, x0 + ux * d, y0 + uy * d, sc);
    }
    parallel_for(count, sc.threads, [&](std::size_t k) {
        const double d = static_cast<double>(k) * step;
        auto rng = RandomStream::derive(seed, stream_domain::line, k);
        out[k] = measure_spot(f, x0 + ux * d, y0 + uy * d, sc, chain, rng);
    });
    return out;
}

void write_csv(std::ostream& out, const ScanMap& m) {
    out << "x_mm,y_mm,counts_514,counts_635,truth\n";
    for (std::size_t k = 0; k < m.records.size(); ++k) {
        const auto& r = m.records[k];
        out << csv::format_double(r.x) << ',' << csv::format_double(r.y) << ',' << r.reading_514.counts << ','
            << r.reading_635.counts << ',' << (m.truth[k] ? 1 : 0) << '\n';
    }
}

void write_csv(const std::string& path, const ScanMap& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_csv(out, m);
}

ScanMap read_csv(std::istream& in) {
    const auto t = csv::Table::read(in, {"x_mm", "y_mm", "counts_514", "counts_635", "truth"});
    if (t.rows() == 0) throw DataError("scan CSV has no rows");
    ScanMap m;
    m.records.resize(t.rows());
    m.truth.resize(t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r) {
        auto& rec = m.records[r];
        rec.x = t.number(r, 0);
        rec.y = t.number(r, 1);
        const auto c514 = t.integer(r, 2);
        const auto c635 = t.integer(r, 3);
        if (c514 < 0) throw DataError("column 'counts_514': negative count on row " + std::to_string(r + 1));
        if (c635 < 0) throw DataError("column 'counts_635': negative count on row " + std::to_string(r + 1));
        rec.reading_514 = {514, static_cast<std::uint32_t>(c514), std::nan(""), false};
        rec.reading_635 = {635, static_cast<std::uint32_t>(c635), std::nan(""), false};
        m.truth[r] = t.boolean(r, 4);
    }
    std::size_t cols = 0;
    while (cols < m.records.size() && m.records[cols].y == m.records[0].y) ++cols;
    m.cols = cols;
    m.rows = m.records.size() / cols;
    if (m.rows * m.cols != m.records.size()) throw DataError("scan CSV is not a full raster (ragged rows)");
    return m;
}

ScanMap read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    try {
        return read_csv(in);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

std::string oracle_filename(std::size_t record_index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "cell_%05zu.csv", record_index);
    return buf;
}

void write_oracles(const std::string& dir, const ScanMap& m) {
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < m.records.size(); ++k) {
        if (m.records[k].oracle) spectral::write_csv((std::filesystem::path(dir) / oracle_filename(k)).string(), *m.records[k].oracle);
    }
}

void read_oracles(const std::string& dir, ScanMap& m) {
    for (std::size_t k = 0; k < m.records.size(); ++k) {
        const auto path = std::filesystem::path(dir) / oracle_filename(k);
        if (!std::filesystem::exists(path)) throw DataError("missing oracle spectrum '" + path.string() + "'");
        m.records[k].oracle = spectral::read_csv(path.string());
    }
}

}  // namespace fluorosim::scanner
