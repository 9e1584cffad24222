#pragma once

#include "fluorosim/optics.hpp"
#include "fluorosim/random.hpp"
#include "fluorosim/spectral.hpp"

#include <cstdint>

namespace fluorosim::detector {

// One filter-photodiode channel of the sensor chip.
//
// od_floor defaults are back-derived from the measured leakage fractions of
// the chip (0.37 % of green into the red channel, 0.45 % of red into the green
// channel).
struct ChannelSpec {
    double center = 514.0;  // nm
    double fwhm = 45.0;     // nm
    double peak_transmission = 1.0;
    double od_floor = 2.35;

    static ChannelSpec green() { return {514.0, 45.0, 1.0, 2.35}; }
    static ChannelSpec red() { return {635.0, 45.0, 1.0, 2.43}; }

    optics::FilterSpec filter() const;
    void validate() const;
};

struct DetectorConfig {
    double nep = 4.0;                  // nW / sqrt(Hz)
    double bandwidth = 1.0;            // Hz
    int adc_bits = 16;
    double full_scale_power = 1000.0;  // nW mapped to the maximum code

    double noise_sigma() const;  // nW
    std::uint32_t max_count() const;
    // nW per ADC count
    double count_scale() const { return full_scale_power / static_cast<double>(max_count()); }
    void validate() const;
};

struct ChannelReading {
    int channel = 514;  // nominal channel wavelength
    std::uint32_t counts = 0;
    double in_band_power = 0.0;  // nW before noise
    bool saturated = false;
};

// Power collected by a channel: the spectrum weighted by the full channel
// transmission (passband and leakage floor) and integrated over the grid.
double channel_power(const spectral::Spectrum& s, const ChannelSpec& c);

// Adds white Gaussian noise of sigma = nep * sqrt(bandwidth), clamps at zero
// and quantizes.
ChannelReading read_channel(double power, const DetectorConfig& cfg, RandomStream& rng, int channel = 514);

struct SpectrometerConfig {
    double resolution = 5.0;  // nm FWHM of the instrument line shape
    double noise_sd = 0.0;    // nW/nm additive noise floor

    void validate() const;
};

// Instrument line-shape convolution (Gaussian, FWHM = resolution) followed by
// an optional additive noise floor; negative samples are clamped at zero.
spectral::Spectrum spectrometer_read(const spectral::Spectrum& s, double resolution, double noise_sd, RandomStream& rng);
spectral::Spectrum spectrometer_read(const spectral::Spectrum& s, const SpectrometerConfig& cfg, RandomStream& rng);

// Smallest excitation power (nW) whose emission reaches the detector NEP.
double min_detectable_excitation(const DetectorConfig& cfg, double emission_ratio);

}  // namespace fluorosim::detector
