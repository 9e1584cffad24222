#pragma once

#include "fluorosim/spectral.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace fluorosim::analysis {

// Two-channel diagnostic ratio: i635 / i514 - alpha. Negative values are
// returned as is. Throws DataError when i514 is zero (dead channel).
double channel_ratio(double i635, double i514, double alpha = 0.0);

// ---------------------------------------------------------------------------
// Background (autofluorescence) peak fitting

struct FitOptions {
    double window_lo = 450.0;   // nm
    double window_hi = 600.0;   // nm
    double exclude_lo = 620.0;  // PpIX band, never part of the fit
    double exclude_hi = 720.0;
    double background_at = 635.0;
    double signal_at = 510.0;
    int max_iterations = 200;
    double tolerance = 1e-9;  // relative change of the residual sum of squares

    void validate() const;
};

struct BackgroundFit {
    spectral::PeakModel peak;
    double i_background = 0.0;  // fitted autofluorescence at background_at
    double residual_norm = 0.0;
    int iterations = 0;
};

// Sum of squared residuals of a Gaussian (center, fwhm, amplitude) against the
// fit-window samples, and its analytic gradient.
struct ObjectiveValue {
    double value = 0.0;
    std::array<double, 3> gradient{};  // d/d(center), d/d(fwhm), d/d(amplitude)
};

class BackgroundObjective {
public:
    BackgroundObjective(const spectral::Spectrum& s, const FitOptions& opt);

    ObjectiveValue evaluate(const std::array<double, 3>& params) const;
    std::size_t sample_count() const { return lambda_.size(); }
    double max_value() const;

    std::span<const double> wavelengths() const { return lambda_; }
    std::span<const double> observed() const { return observed_; }

private:
    std::vector<double> lambda_;
    std::vector<double> observed_;
};

// Levenberg-Marquardt least-squares fit of the autofluorescence peak, started
// from (510 nm, 118 nm, window maximum). Throws FitError on all-zero input or
// when the iteration cap is hit.
BackgroundFit fit_background(const spectral::Spectrum& s, const FitOptions& opt = {});

// Spectrometer ratio (s(635) - I_background) / s(510).
double spectral_ratio(const spectral::Spectrum& s, const FitOptions& opt = {});

// ---------------------------------------------------------------------------
// Classification statistics

// Divides by the maximum. Throws DataError when no value is positive.
std::vector<double> normalize(std::span<const double> values);

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    double sensitivity() const;
    double specificity() const;
    double youden() const { return sensitivity() + specificity() - 1.0; }
};

struct RocPoint {
    double threshold = 0.0;  // scores >= threshold are called positive
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // (0,0) first, (1,1) last
    double auc = 0.0;
};

// Threshold sweep over the distinct scores in descending order; tied scores
// move together, so the trapezoid AUC counts ties as one half.
RocCurve roc(std::span<const double> scores, const std::vector<bool>& labels);

ConfusionCounts confusion_at(std::span<const double> scores, const std::vector<bool>& labels, double threshold);

struct OperatingPoint {
    double threshold = 0.0;
    ConfusionCounts counts;
    double youden = 0.0;
};

// Threshold maximizing Youden's J; ties resolve to the higher threshold.
OperatingPoint optimal_threshold(std::span<const double> scores, const std::vector<bool>& labels);

// Average ranks (1-based), ties share their mean rank.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace fluorosim::analysis
