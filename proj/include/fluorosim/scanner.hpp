#pragma once

#include "fluorosim/detector.hpp"
#include "fluorosim/optics.hpp"
#include "fluorosim/phantom.hpp"
#include "fluorosim/spectral.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fluorosim::scanner {

// Everything between the tissue surface and the ADC codes.
struct OpticalChain {
    spectral::WavelengthGrid grid = spectral::default_grid();
    spectral::EmissionModel emission;
    // Longpass in front of the chip that blocks the excitation line.
    std::optional<optics::FilterSpec> emission_filter = optics::FilterSpec::longpass(425.0, 1.0, 2.4, 5.0);
    detector::ChannelSpec ch514 = detector::ChannelSpec::green();
    detector::ChannelSpec ch635 = detector::ChannelSpec::red();
    detector::DetectorConfig detector;
    detector::SpectrometerConfig spectrometer{5.0, 0.01};
};

struct ScanConfig {
    double step = 1.0;            // mm between spot centres
    double spot_width = 1.0;      // mm
    double spot_height = 1.0;     // mm
    double excitation_power = 4000.0;  // nW delivered to the spot
    optics::WindowState window;
    bool fouling_per_position = true;  // redraw window attenuation at every contact
    bool record_oracle = false;
    // Raster footprint; unset origin / zero counts fill the field from the
    // lower-left corner.
    std::optional<double> origin_x;
    std::optional<double> origin_y;
    std::size_t cols = 0;
    std::size_t rows = 0;
    unsigned threads = 1;

    void validate() const;
};

struct ScanRecord {
    double x = 0.0;  // spot centre, mm
    double y = 0.0;
    detector::ChannelReading reading_514;
    detector::ChannelReading reading_635;
    double window_attenuation = 1.0;
    std::optional<spectral::Spectrum> oracle;
};

struct ScanMap {
    ScanConfig config;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<ScanRecord> records;  // row-major, y outer
    std::vector<bool> truth;          // majority vote of field truth under each spot
};

// Measures one spot with the given window state: emission spectrum scaled by
// excitation, through window and emission filter, integrated per channel and
// read out. The oracle spectrum (pre-window) is appended when requested.
ScanRecord measure_emission(double a_amp, double p_amp, double x, double y, const ScanConfig& sc,
                            const optics::WindowState& window, const OpticalChain& chain, RandomStream& rng);

// Full per-position measurement: spot average, optional fouling draw, chain.
ScanRecord measure_spot(const phantom::TissueField& f, double x, double y, const ScanConfig& sc,
                        const OpticalChain& chain, RandomStream& rng);

// Each cell draws from its own substream, so output is bit-identical for a
// seed regardless of sc.threads.
ScanMap raster_scan(const phantom::TissueField& f, const ScanConfig& sc, const OpticalChain& chain, std::uint64_t seed);

std::vector<ScanRecord> line_scan(const phantom::TissueField& f, double x0, double y0, double x1, double y1,
                                  double step, const ScanConfig& sc, const OpticalChain& chain, std::uint64_t seed);

// CSV: x_mm,y_mm,counts_514,counts_635,truth
void write_csv(std::ostream& out, const ScanMap& m);
void write_csv(const std::string& path, const ScanMap& m);
ScanMap read_csv(std::istream& in);
ScanMap read_csv(const std::string& path);

std::string oracle_filename(std::size_t record_index);
// Writes one spectrum CSV per record holding an oracle.
void write_oracles(const std::string& dir, const ScanMap& m);
// Loads oracle spectra for every record; throws DataError if any is missing.
void read_oracles(const std::string& dir, ScanMap& m);

}  // namespace fluorosim::scanner
