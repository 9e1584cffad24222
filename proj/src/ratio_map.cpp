#include "fluorosim/ratio_map.hpp"

#include "fluorosim/csv.hpp"
#include "fluorosim/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

namespace fluorosim::analysis {

RatioMap build_ratio_map(const scanner::ScanMap& scan, double alpha) {
    RatioMap m;
    m.rows = scan.rows;
    m.cols = scan.cols;
    m.alpha = alpha;
    const std::size_t n = scan.records.size();
    m.x.resize(n);
    m.y.resize(n);
    m.raw_ratio.resize(n);
    m.truth = scan.truth;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& r = scan.records[k];
        m.x[k] = r.x;
        m.y[k] = r.y;
        if (r.reading_514.counts == 0) {
            throw DataError("cell " + std::to_string(k) + " at (" + csv::format_double(r.x) + ", " +
                            csv::format_double(r.y) + ") mm: 514 nm channel reads zero");
        }
        m.raw_ratio[k] = channel_ratio(r.reading_635.counts, r.reading_514.counts, alpha);
    }
    m.normalized_ratio = normalize(m.raw_ratio);
    return m;
}

std::vector<bool> classify(const RatioMap& m, double threshold, bool normalized) {
    const auto& values = normalized ? m.normalized_ratio : m.raw_ratio;
    std::vector<bool> out(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) out[k] = values[k] >= threshold;
    return out;
}

std::vector<double> oracle_ratios(const scanner::ScanMap& scan, const FitOptions& fit) {
    std::vector<double> out(scan.records.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (!scan.records[k].oracle) throw DataError("cell " + std::to_string(k) + " has no oracle spectrum");
        out[k] = spectral_ratio(*scan.records[k].oracle, fit);
    }
    return out;
}

CorrelationSplit correlate_with_oracle(const RatioMap& m, const std::vector<double>& oracle, double margin_threshold) {
    if (oracle.size() != m.size()) throw DataError("oracle ratio count does not match the ratio map");
    std::vector<double> sensor_t;
    std::vector<double> oracle_t;
    std::vector<double> sensor_h;
    std::vector<double> oracle_h;
    for (std::size_t k = 0; k < m.size(); ++k) {
        if (m.normalized_ratio[k] >= margin_threshold) {
            sensor_t.push_back(m.raw_ratio[k]);
            oracle_t.push_back(oracle[k]);
        } else {
            sensor_h.push_back(m.raw_ratio[k]);
            oracle_h.push_back(oracle[k]);
        }
    }
    CorrelationSplit out;
    out.tumour_cells = sensor_t.size();
    out.healthy_cells = sensor_h.size();
    if (sensor_t.size() >= 3) out.r_s_tumour = spearman(sensor_t, oracle_t);
    if (sensor_h.size() >= 3) out.r_s_healthy = spearman(sensor_h, oracle_h);
    return out;
}

AnalysisResult analyze_scan(const scanner::ScanMap& scan, const AnalysisSettings& settings) {
    AnalysisResult res;
    res.map = build_ratio_map(scan, settings.alpha);
    const auto& scores = res.map.normalized_ratio;
    res.curve = roc(scores, res.map.truth);
    res.predicted = classify(res.map, settings.margin_threshold, true);

    auto& s = res.summary;
    s.cells = res.map.size();
    for (bool t : res.map.truth) s.truth_positive += t ? 1 : 0;
    s.auc = res.curve.auc;
    s.optimum = optimal_threshold(scores, res.map.truth);
    s.at_margin = confusion_at(scores, res.map.truth, settings.margin_threshold);
    s.margin_threshold = settings.margin_threshold;
    s.alpha = settings.alpha;

    bool have_oracle = !scan.records.empty();
    for (const auto& r : scan.records) have_oracle = have_oracle && r.oracle.has_value();
    if (have_oracle) {
        s.correlation = correlate_with_oracle(res.map, oracle_ratios(scan, settings.fit), settings.margin_threshold);
    }
    return res;
}

void write_csv(std::ostream& out, const RatioMap& m, const std::vector<bool>& predicted) {
    out << "x_mm,y_mm,raw_ratio,normalized_ratio,predicted,truth\n";
    for (std::size_t k = 0; k < m.size(); ++k) {
        out << csv::format_double(m.x[k]) << ',' << csv::format_double(m.y[k]) << ',' << csv::format_double(m.raw_ratio[k])
            << ',' << csv::format_double(m.normalized_ratio[k]) << ',' << (predicted[k] ? 1 : 0) << ','
            << (m.truth[k] ? 1 : 0) << '\n';
    }
}

RatioMap read_ratio_csv(std::istream& in, std::vector<bool>* predicted) {
    const auto t = csv::Table::read(in, {"x_mm", "y_mm", "raw_ratio", "normalized_ratio", "predicted", "truth"});
    if (t.rows() == 0) throw DataError("ratio map CSV has no rows");
    RatioMap m;
    const std::size_t n = t.rows();
    m.x.resize(n);
    m.y.resize(n);
    m.raw_ratio.resize(n);
    m.normalized_ratio.resize(n);
    m.truth.resize(n);
    if (predicted) predicted->resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        m.x[r] = t.number(r, 0);
        m.y[r] = t.number(r, 1);
        m.raw_ratio[r] = t.number(r, 2);
        m.normalized_ratio[r] = t.number(r, 3);
        const bool p = t.boolean(r, 4);
        if (predicted) (*predicted)[r] = p;
        m.truth[r] = t.boolean(r, 5);
    }
    std::size_t cols = 0;
    while (cols < n && m.y[cols] == m.y[0]) ++cols;
    m.cols = cols;
    m.rows = n / cols;
    // alpha is not stored in the CSV.
    return m;
}

void write_csv(std::ostream& out, const RocCurve& c) {
    out << "threshold,fpr,tpr\n";
    for (const auto& p : c.points) {
        out << (std::isinf(p.threshold) ? std::string("inf") : csv::format_double(p.threshold)) << ','
            << csv::format_double(p.fpr) << ',' << csv::format_double(p.tpr) << '\n';
    }
}

RocCurve read_roc_csv(std::istream& in) {
    const auto t = csv::Table::read(in, {"threshold", "fpr", "tpr"});
    RocCurve c;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const double thr = t.cell(r, 0) == "inf" ? std::numeric_limits<double>::infinity() : t.number(r, 0);
        c.points.push_back({thr, t.number(r, 1), t.number(r, 2)});
    }
    if (c.points.size() < 2) throw DataError("ROC CSV needs at least two points");
    for (std::size_t i = 1; i < c.points.size(); ++i) {
        const auto& a = c.points[i - 1];
        const auto& b = c.points[i];
        if (b.fpr < a.fpr || b.tpr < a.tpr) throw DataError("ROC CSV: points are not monotone");
        c.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    }
    return c;
}

std::string summary_json(const Summary& s) {
    nlohmann::ordered_json j;
    j["cells"] = s.cells;
    j["truth_positive_cells"] = s.truth_positive;
    j["alpha"] = s.alpha;
    j["auc"] = s.auc;
    j["optimum_threshold"] = s.optimum.threshold;
    j["sensitivity"] = s.optimum.counts.sensitivity();
    j["specificity"] = s.optimum.counts.specificity();
    j["youden_j"] = s.optimum.youden;
    j["margin_threshold"] = s.margin_threshold;
    j["margin_sensitivity"] = s.at_margin.sensitivity();
    j["margin_specificity"] = s.at_margin.specificity();
    j["margin_confusion"] = {{"tp", s.at_margin.tp}, {"fp", s.at_margin.fp}, {"tn", s.at_margin.tn}, {"fn", s.at_margin.fn}};
    if (s.correlation) {
        const auto& c = *s.correlation;
        j["tumour_region_cells"] = c.tumour_cells;
        j["healthy_region_cells"] = c.healthy_cells;
        j["r_s"] = c.r_s_tumour ? nlohmann::ordered_json(*c.r_s_tumour) : nlohmann::ordered_json(nullptr);
        j["r_s_healthy"] = c.r_s_healthy ? nlohmann::ordered_json(*c.r_s_healthy) : nlohmann::ordered_json(nullptr);
    } else {
        j["r_s"] = nullptr;
        j["r_s_healthy"] = nullptr;
    }
    return j.dump(2) + "\n";
}

}  // namespace fluorosim::analysis
