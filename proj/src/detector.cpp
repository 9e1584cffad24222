#include "fluorosim/detector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace fluorosim::detector {

optics::FilterSpec ChannelSpec::filter() const {
    return optics::FilterSpec::bandpass(center, fwhm, peak_transmission, od_floor);
}

void ChannelSpec::validate() const {
    if (!(fwhm > 0.0)) throw std::invalid_argument("channel: fwhm must be positive");
    if (!(od_floor >= 0.0)) throw std::invalid_argument("channel: od_floor must be >= 0");
    filter().validate();
}

double DetectorConfig::noise_sigma() const { return nep * std::sqrt(bandwidth); }

std::uint32_t DetectorConfig::max_count() const {
    return static_cast<std::uint32_t>((std::uint64_t{1} << adc_bits) - 1);
}

void DetectorConfig::validate() const {
    if (!(nep >= 0.0)) throw std::invalid_argument("detector: nep must be >= 0");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("detector: bandwidth must be positive");
    if (adc_bits < 1 || adc_bits > 32) throw std::invalid_argument("detector: adc_bits must lie in [1, 32]");
    if (!(full_scale_power > 0.0)) throw std::invalid_argument("detector: full_scale_power must be positive");
}

double channel_power(const spectral::Spectrum& s, const ChannelSpec& c) {
    c.validate();
    const auto& g = s.grid();
    const auto f = c.filter();
    double total = 0.0;
    double prev = s[0] * optics::transmission(f, g.wavelength(0));
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double cur = s[i] * optics::transmission(f, g.wavelength(i));
        total += 0.5 * (prev + cur);
        prev = cur;
    }
    return total * g.step();
}

ChannelReading read_channel(double power, const DetectorConfig& cfg, RandomStream& rng, int channel) {
    if (!(power >= 0.0)) throw std::invalid_argument("read_channel: power must be non-negative");
    cfg.validate();
    const double sigma = cfg.noise_sigma();
    // The draw is consumed even when sigma is zero so stream positions do not
    // depend on the noise setting.
    const double noise = rng.normal();
    const double noisy = std::max(0.0, power + sigma * noise);
    const double max_count = static_cast<double>(cfg.max_count());
    const double code = std::round(noisy / cfg.full_scale_power * max_count);

    ChannelReading r;
    r.channel = channel;
    r.in_band_power = power;
    r.saturated = code > max_count;
    r.counts = static_cast<std::uint32_t>(std::clamp(code, 0.0, max_count));
    return r;
}

void SpectrometerConfig::validate() const {
    if (!(resolution > 0.0)) throw std::invalid_argument("spectrometer: resolution must be positive");
    if (!(noise_sd >= 0.0)) throw std::invalid_argument("spectrometer: noise_sd must be >= 0");
}

spectral::Spectrum spectrometer_read(const spectral::Spectrum& s, double resolution, double noise_sd, RandomStream& rng) {
    const auto& g = s.grid();
    if (!(resolution >= g.step() * (1.0 - 1e-9))) throw std::invalid_argument("spectrometer: resolution below grid step");
    if (!(noise_sd >= 0.0)) throw std::invalid_argument("spectrometer: noise_sd must be >= 0");

    const double sigma_samples = resolution / spectral::kFwhmPerSigma / g.step();
    const auto half = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma_samples));
    std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
    for (std::ptrdiff_t k = -half; k <= half; ++k) {
        const double x = static_cast<double>(k) / sigma_samples;
        kernel[static_cast<std::size_t>(k + half)] = std::exp(-0.5 * x * x);
    }

    const auto n = static_cast<std::ptrdiff_t>(s.size());
    spectral::Spectrum out(g);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0;
        double weight = 0.0;
        for (std::ptrdiff_t k = -half; k <= half; ++k) {
            const std::ptrdiff_t j = i + k;
            if (j < 0 || j >= n) continue;
            const double w = kernel[static_cast<std::size_t>(k + half)];
            acc += w * s[static_cast<std::size_t>(j)];
            weight += w;
        }
        double v = acc / weight;
        const double noise = rng.normal();
        v += noise_sd * noise;
        out.set(static_cast<std::size_t>(i), std::max(0.0, v));
    }
    return out;
}

spectral::Spectrum spectrometer_read(const spectral::Spectrum& s, const SpectrometerConfig& cfg, RandomStream& rng) {
    cfg.validate();
    return spectrometer_read(s, cfg.resolution, cfg.noise_sd, rng);
}

double min_detectable_excitation(const DetectorConfig& cfg, double emission_ratio) {
    cfg.validate();
    if (!(emission_ratio > 0.0)) throw std::invalid_argument("min_detectable_excitation: emission ratio must be positive");
    return cfg.noise_sigma() / emission_ratio;
}

}  // namespace fluorosim::detector
