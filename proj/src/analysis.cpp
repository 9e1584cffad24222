#include "fluorosim/analysis.hpp"

#include "fluorosim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fluorosim::analysis {

double channel_ratio(double i635, double i514, double alpha) {
    if (i514 == 0.0) throw DataError("514 nm channel reads zero: ratio undefined (dead channel?)");
    return i635 / i514 - alpha;
}

void FitOptions::validate() const {
    if (!(window_lo < window_hi)) throw std::invalid_argument("fit: window_lo must be below window_hi");
    if (!(exclude_lo <= exclude_hi)) throw std::invalid_argument("fit: exclude_lo must not exceed exclude_hi");
    if (max_iterations < 1) throw std::invalid_argument("fit: max_iterations must be positive");
    if (!(tolerance > 0.0)) throw std::invalid_argument("fit: tolerance must be positive");
}

BackgroundObjective::BackgroundObjective(const spectral::Spectrum& s, const FitOptions& opt) {
    opt.validate();
    const auto& g = s.grid();
    if (!g.contains(opt.window_lo) || !g.contains(opt.window_hi)) {
        throw DataError("spectrum does not cover the background fit window");
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double l = g.wavelength(i);
        if (l < opt.window_lo || l > opt.window_hi) continue;
        if (l >= opt.exclude_lo && l <= opt.exclude_hi) continue;
        lambda_.push_back(l);
        observed_.push_back(s[i]);
    }
    if (lambda_.size() < 3) throw DataError("background fit window holds fewer than three samples");
}

double BackgroundObjective::max_value() const { return *std::max_element(observed_.begin(), observed_.end()); }

namespace {

struct ModelTerms {
    double value;
    std::array<double, 3> jac;  // d/d(center), d/d(fwhm), d/d(amplitude)
};

ModelTerms gaussian_terms(double lambda, const std::array<double, 3>& p) {
    const double center = p[0];
    const double sigma = p[1] / spectral::kFwhmPerSigma;
    const double amp = p[2];
    const double d = lambda - center;
    const double e = std::exp(-d * d / (2.0 * sigma * sigma));
    const double v = amp * e;
    return {v, {v * d / (sigma * sigma), v * d * d / (sigma * sigma * sigma) / spectral::kFwhmPerSigma, e}};
}

// Solves a 3x3 system by Gaussian elimination with partial pivoting.
bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b, std::array<double, 3>& x) {
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        if (std::abs(a[pivot][col]) < 1e-300) return false;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = col + 1; r < 3; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int r = 2; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < 3; ++c) acc -= a[r][c] * x[c];
        x[r] = acc / a[r][r];
    }
    return true;
}

}  // namespace

ObjectiveValue BackgroundObjective::evaluate(const std::array<double, 3>& params) const {
    ObjectiveValue out;
    for (std::size_t i = 0; i < lambda_.size(); ++i) {
        const auto t = gaussian_terms(lambda_[i], params);
        const double r = t.value - observed_[i];
        out.value += r * r;
        for (int k = 0; k < 3; ++k) out.gradient[k] += 2.0 * r * t.jac[k];
    }
    return out;
}

BackgroundFit fit_background(const spectral::Spectrum& s, const FitOptions& opt) {
    const BackgroundObjective objective(s, opt);
    const double peak = objective.max_value();
    if (!(peak > 0.0)) throw FitError("background fit: spectrum is zero over the fit window");

    const auto lambda = objective.wavelengths();
    const auto observed = objective.observed();
    // Residuals below this are numerical noise on exact data.
    const double floor = 1e-24 * peak * peak * static_cast<double>(lambda.size());

    std::array<double, 3> p{510.0, 118.0, peak};
    double sse = objective.evaluate(p).value;
    double mu = 1e-3;
    int iter = 0;
    bool converged = sse <= floor;

    while (!converged && iter < opt.max_iterations) {
        ++iter;
        std::array<std::array<double, 3>, 3> jtj{};
        std::array<double, 3> jtr{};
        for (std::size_t i = 0; i < lambda.size(); ++i) {
            const auto t = gaussian_terms(lambda[i], p);
            const double r = t.value - observed[i];
            for (int a = 0; a < 3; ++a) {
                jtr[a] += t.jac[a] * r;
                for (int b = 0; b < 3; ++b) jtj[a][b] += t.jac[a] * t.jac[b];
            }
        }

        bool accepted = false;
        for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
            auto damped = jtj;
            for (int a = 0; a < 3; ++a) damped[a][a] += mu * std::max(jtj[a][a], 1e-300);
            std::array<double, 3> rhs{-jtr[0], -jtr[1], -jtr[2]};
            std::array<double, 3> step{};
            if (!solve3(damped, rhs, step)) {
                mu *= 10.0;
                continue;
            }
            const std::array<double, 3> trial{p[0] + step[0], p[1] + step[1], p[2] + step[2]};
            if (!(trial[1] > 0.0) || !(trial[2] >= 0.0)) {
                mu *= 10.0;
                continue;
            }
            const double trial_sse = objective.evaluate(trial).value;
            if (trial_sse <= sse) {
                const double change = sse - trial_sse;
                converged = trial_sse <= floor || change <= opt.tolerance * sse;
                p = trial;
                sse = trial_sse;
                mu = std::max(mu / 10.0, 1e-12);
                accepted = true;
            } else {
                mu *= 10.0;
            }
        }
        // No downhill step exists at any damping: we sit at the minimum to
        // working precision.
        if (!accepted) converged = true;
    }
    if (!converged) throw FitError("background fit did not converge within " + std::to_string(opt.max_iterations) + " iterations");

    BackgroundFit fit;
    fit.peak = {p[0], p[1], p[2]};
    fit.i_background = fit.peak.value(opt.background_at);
    fit.residual_norm = std::sqrt(sse);
    fit.iterations = iter;
    return fit;
}

double spectral_ratio(const spectral::Spectrum& s, const FitOptions& opt) {
    const double signal = s.at(opt.signal_at);
    if (signal == 0.0) throw DataError("spectrum is zero at the autofluorescence peak: ratio undefined");
    const auto fit = fit_background(s, opt);
    return (s.at(opt.background_at) - fit.i_background) / signal;
}

std::vector<double> normalize(std::span<const double> values) {
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : values) peak = std::max(peak, v);
    if (values.empty() || !(peak > 0.0)) throw DataError("normalize: no positive value to normalize by");
    std::vector<double> out(values.begin(), values.end());
    for (double& v : out) v /= peak;
    return out;
}

double ConfusionCounts::sensitivity() const {
    return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double ConfusionCounts::specificity() const {
    return tn + fp == 0 ? 0.0 : static_cast<double>(tn) / static_cast<double>(tn + fp);
}

namespace {

std::pair<std::size_t, std::size_t> class_sizes(std::span<const double> scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
    std::size_t pos = 0;
    for (bool l : labels) pos += l ? 1 : 0;
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) {
        throw DataError("ground truth holds a single class (" + std::to_string(pos) + " positive, " + std::to_string(neg) +
                        " negative): ROC undefined");
    }
    for (double s : scores) {
        if (std::isnan(s)) throw DataError("score is NaN");
    }
    return {pos, neg};
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace

RocCurve roc(std::span<const double> scores, const std::vector<bool>& labels) {
    const auto [pos, neg] = class_sizes(scores, labels);
    const auto order = descending_order(scores);

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0;
    std::size_t fp = 0;
    double area = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double thr = scores[order[i]];
        const std::size_t tp_before = tp;
        const std::size_t fp_before = fp;
        while (i < order.size() && scores[order[i]] == thr) {
            if (labels[order[i]]) ++tp; else ++fp;
            ++i;
        }
        // Trapezoid in integer units; divided by pos*neg at the end.
        area += static_cast<double>(fp - fp_before) * static_cast<double>(tp + tp_before) * 0.5;
        curve.points.push_back({thr, static_cast<double>(fp) / static_cast<double>(neg),
                                static_cast<double>(tp) / static_cast<double>(pos)});
    }
    curve.auc = area / (static_cast<double>(pos) * static_cast<double>(neg));
    return curve;
}

ConfusionCounts confusion_at(std::span<const double> scores, const std::vector<bool>& labels, double threshold) {
    class_sizes(scores, labels);
    ConfusionCounts c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i]) {
            if (predicted) ++c.tp; else ++c.fn;
        } else {
            if (predicted) ++c.fp; else ++c.tn;
        }
    }
    return c;
}

OperatingPoint optimal_threshold(std::span<const double> scores, const std::vector<bool>& labels) {
    const auto [pos, neg] = class_sizes(scores, labels);
    const auto order = descending_order(scores);

    OperatingPoint best;
    best.youden = -std::numeric_limits<double>::infinity();
    ConfusionCounts c;
    c.fn = pos;
    c.tn = neg;
    std::size_t i = 0;
    while (i < order.size()) {
        const double thr = scores[order[i]];
        while (i < order.size() && scores[order[i]] == thr) {
            if (labels[order[i]]) {
                ++c.tp;
                --c.fn;
            } else {
                ++c.fp;
                --c.tn;
            }
            ++i;
        }
        if (c.youden() > best.youden) best = {thr, c, c.youden()};
    }
    return best;
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("correlation: series differ in length");
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw DataError("correlation: constant series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("spearman: series differ in length");
    if (x.size() < 3) throw DataError("spearman: need at least three pairs");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

}  // namespace fluorosim::analysis
