#pragma once

#include "fluorosim/analysis.hpp"
#include "fluorosim/scanner.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fluorosim::analysis {

struct RatioMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    double alpha = 0.0;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> raw_ratio;
    std::vector<double> normalized_ratio;  // raw / max(raw)
    std::vector<bool> truth;

    std::size_t size() const { return raw_ratio.size(); }
};

// Per-cell counts_635 / counts_514 - alpha, then peak-normalized.
RatioMap build_ratio_map(const scanner::ScanMap& scan, double alpha = 0.0);

// Cell positive iff its (normalized or raw) ratio >= threshold.
std::vector<bool> classify(const RatioMap& m, double threshold, bool normalized = true);

// Spectrometer ratio of every recorded oracle spectrum.
std::vector<double> oracle_ratios(const scanner::ScanMap& scan, const FitOptions& fit = {});

struct CorrelationSplit {
    std::size_t tumour_cells = 0;
    std::size_t healthy_cells = 0;
    std::optional<double> r_s_tumour;  // unset when fewer than three cells
    std::optional<double> r_s_healthy;
};

// Spearman correlation of sensor against spectrometer ratios, split by the
// sensor margin threshold on the normalized map.
CorrelationSplit correlate_with_oracle(const RatioMap& m, const std::vector<double>& oracle, double margin_threshold);

struct AnalysisSettings {
    double alpha = 0.0;
    double margin_threshold = 0.21;  // normalized sensor ratio at the tumour margin
    double spectrometer_margin_threshold = 0.5;
    FitOptions fit;
};

struct Summary {
    std::size_t cells = 0;
    std::size_t truth_positive = 0;
    double auc = 0.0;
    OperatingPoint optimum;           // Youden optimum on normalized ratios
    ConfusionCounts at_margin;        // confusion at the margin threshold
    double margin_threshold = 0.0;
    double alpha = 0.0;
    std::optional<CorrelationSplit> correlation;
};

struct AnalysisResult {
    RatioMap map;
    RocCurve curve;
    std::vector<bool> predicted;  // at the margin threshold
    Summary summary;
};

// Throws DataError when truth holds a single class.
AnalysisResult analyze_scan(const scanner::ScanMap& scan, const AnalysisSettings& settings);

// RatioMap CSV: x_mm,y_mm,raw_ratio,normalized_ratio,predicted,truth
void write_csv(std::ostream& out, const RatioMap& m, const std::vector<bool>& predicted);
RatioMap read_ratio_csv(std::istream& in, std::vector<bool>* predicted = nullptr);

// RocCurve CSV: threshold,fpr,tpr
void write_csv(std::ostream& out, const RocCurve& c);
RocCurve read_roc_csv(std::istream& in);

// Summary as JSON text.
std::string summary_json(const Summary& s);

}  // namespace fluorosim::analysis
