#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "specprop/common.hpp"

namespace specprop {

/// Nonnegative step function: values[i] on [breaks[i], breaks[i+1]), zero elsewhere.
struct StepFunction {
    std::vector<double> breaks;
    std::vector<double> values;

    StepFunction() = default;
    StepFunction(std::vector<double> b, std::vector<double> v) : breaks(std::move(b)), values(std::move(v)) {
        if (breaks.empty() && values.empty()) return;
        if (breaks.size() != values.size() + 1) throw ArgumentError("step function: need one more break than values");
        for (std::size_t i = 0; i < breaks.size(); ++i) {
            if (!std::isfinite(breaks[i])) throw ArgumentError("step function: support must be bounded");
            if (i > 0 && !(breaks[i] > breaks[i - 1]))
                throw ArgumentError("step function: breaks must be strictly increasing");
        }
    }

    bool empty() const { return values.empty(); }
    double support_begin() const { return breaks.front(); }
    double support_end() const { return breaks.back(); }

    double operator()(double x) const {
        if (empty() || x < breaks.front() || x >= breaks.back()) return 0.0;
        const auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
        return values[static_cast<std::size_t>(it - breaks.begin() - 1)];
    }

    /// Integral over [a, b).
    double integral(double a, double b) const {
        double acc = 0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double lo = std::max(a, breaks[i]), hi = std::min(b, breaks[i + 1]);
            if (hi > lo) acc += values[i] * (hi - lo);
        }
        return acc;
    }

    double l1() const {
        double acc = 0;
        for (std::size_t i = 0; i < values.size(); ++i) acc += std::abs(values[i]) * (breaks[i + 1] - breaks[i]);
        return acc;
    }

    double sup() const {
        double m = 0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }

    /// True when no break lies strictly inside (a, b).
    bool constant_on(double a, double b) const {
        const auto it = std::upper_bound(breaks.begin(), breaks.end(), a);
        return it == breaks.end() || *it >= b;
    }
};

/// [2^k l, 2^k (l+1)).
struct DyadicInterval {
    int k = 0;
    long long l = 0;

    double begin() const { return std::ldexp(static_cast<double>(l), k); }
    double end() const { return std::ldexp(static_cast<double>(l + 1), k); }
    double length() const { return std::ldexp(1.0, k); }
    DyadicInterval left() const { return {k - 1, 2 * l}; }
    DyadicInterval right() const { return {k - 1, 2 * l + 1}; }
    DyadicInterval parent() const { return {k + 1, l >= 0 ? l / 2 : -((-l + 1) / 2)}; }
    /// Q* = [2^k (l-1), 2^k (l+2)).
    std::pair<double, double> enlarged() const {
        return {std::ldexp(static_cast<double>(l - 1), k), std::ldexp(static_cast<double>(l + 2), k)};
    }
};

struct SelectedInterval {
    DyadicInterval q;
    double average = 0.0;
    double parent_average = 0.0;
};

struct CZDecomposition {
    double lambda = 0.0;
    StepFunction input;
    std::vector<DyadicInterval> roots;
    std::vector<SelectedInterval> intervals;
    StepFunction good;
    std::vector<StepFunction> bad;
};

namespace detail {

inline double average(const StepFunction& f, const DyadicInterval& q) { return f.integral(q.begin(), q.end()) / q.length(); }

/// Dyadic intervals at scale k covering [lo, hi): one interval, or the pair
/// [-2^k, 0), [0, 2^k) when the support straddles 0. Empty if none exists at this scale.
inline std::vector<DyadicInterval> covering(double lo, double hi, int k) {
    const double len = std::ldexp(1.0, k);
    const long long l = static_cast<long long>(std::floor(lo / len));
    if (std::ldexp(static_cast<double>(l + 1), k) >= hi) return {{k, l}};
    if (lo >= -len && hi <= len && lo < 0 && hi > 0) return {{k, -1}, {k, 0}};
    return {};
}

struct CZBuilder {
    const StepFunction& f;
    double lambda;
    int min_scale;
    std::vector<SelectedInterval> out;

    void descend(const DyadicInterval& q, double q_avg) {
        for (const auto& child : {q.left(), q.right()}) {
            const double mass = f.integral(child.begin(), child.end());
            if (mass == 0.0) continue;
            const double avg = mass / child.length();
            if (avg > lambda) {
                out.push_back({child, avg, q_avg});
                continue;
            }
            if (f.constant_on(child.begin(), child.end()) || child.k <= min_scale) continue;
            descend(child, avg);
        }
    }
};

}  // namespace detail

/// Dyadic Calderon-Zygmund stopping time of a nonnegative step function at level lambda.
/// Roots are the smallest dyadic intervals covering the support with average <= lambda.
/// Descent stops on intervals where f is constant, or after `max_depth` halvings below
/// the root for breakpoints that are not dyadic rationals.
inline CZDecomposition cz_decompose(const StepFunction& f, double lambda, int max_depth = 60) {
    if (!(lambda > 0)) throw ArgumentError("cz_decompose: lambda must be positive");
    for (double v : f.values)
        if (v < 0) throw ArgumentError("cz_decompose: input must be nonnegative");
    CZDecomposition dec;
    dec.lambda = lambda;
    dec.input = f;
    if (f.empty() || f.l1() == 0.0) {
        dec.good = f;
        return dec;
    }
    const double lo = f.support_begin(), hi = f.support_end();
    int k = static_cast<int>(std::ceil(std::log2(hi - lo))) - 1;
    std::vector<DyadicInterval> roots;
    for (;; ++k) {
        roots = detail::covering(lo, hi, k);
        if (roots.empty()) continue;
        bool ok = true;
        for (const auto& r : roots) ok = ok && detail::average(f, r) <= lambda;
        if (ok) break;
        if (k > 1000) throw ArgumentError("cz_decompose: no root scale found");
    }
    dec.roots = roots;
    detail::CZBuilder builder{f, lambda, roots.front().k - max_depth, {}};
    for (const auto& r : roots) builder.descend(r, detail::average(f, r));
    dec.intervals = builder.out;
    std::sort(dec.intervals.begin(), dec.intervals.end(),
              [](const SelectedInterval& a, const SelectedInterval& b) { return a.q.begin() < b.q.begin(); });

    // good part: f off the selected intervals, the average on each of them
    std::vector<double> cuts = f.breaks;
    for (const auto& s : dec.intervals) {
        cuts.push_back(s.q.begin());
        cuts.push_back(s.q.end());
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<double> gv;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        double v = f(mid);
        for (const auto& s : dec.intervals)
            if (mid >= s.q.begin() && mid < s.q.end()) v = s.average;
        gv.push_back(v);
    }
    dec.good = StepFunction(cuts, gv);

    for (const auto& s : dec.intervals) {
        std::vector<double> b{s.q.begin()};
        for (double x : f.breaks)
            if (x > s.q.begin() && x < s.q.end()) b.push_back(x);
        b.push_back(s.q.end());
        std::vector<double> v;
        for (std::size_t i = 0; i + 1 < b.size(); ++i) v.push_back(f(0.5 * (b[i] + b[i + 1])) - s.average);
        dec.bad.emplace_back(b, v);
    }
    return dec;
}

struct CZReport {
    bool good_l1 = false;    // (i) ||g||_1 <= ||f||_1
    bool good_linf = false;  // (i) ||g||_inf <= 2 lambda
    bool disjoint = false;   // (ii)
    bool mean_zero = false;  // (iii)
    bool bad_l1 = false;     // (iv) ||b_j||_1 <= 4 lambda |Q_j|
    bool measure = false;    // (v) sum |Q_j| <= ||f||_1 / lambda
    bool maximal = false;    // parent averages <= lambda
    double slack_good_l1 = 0, slack_good_linf = 0, slack_mean = 0, slack_bad_l1 = 0, slack_measure = 0;
    double reconstruction_residual = 0;
    double enlarged_ratio = 0;  // max | |Q*_j| / |Q_j| - 3 |

    bool all() const { return good_l1 && good_linf && disjoint && mean_zero && bad_l1 && measure && maximal; }
};

/// Checks properties (i)-(v) with slack = bound - measured (nonnegative when satisfied).
inline CZReport verify_cz(const CZDecomposition& dec, double tol = 1e-12) {
    CZReport r;
    const double lam = dec.lambda;
    const double fl1 = dec.input.l1();
    const double scale = std::max(1.0, fl1);

    r.slack_good_l1 = fl1 - dec.good.l1();
    r.good_l1 = r.slack_good_l1 >= -tol * scale;

    // sup of g ignoring slivers far below the root scale
    const double root_len = dec.roots.empty() ? 1.0 : dec.roots.front().length();
    double gsup = 0;
    for (std::size_t i = 0; i < dec.good.values.size(); ++i)
        if (dec.good.breaks[i + 1] - dec.good.breaks[i] > 1e-12 * root_len)
            gsup = std::max(gsup, std::abs(dec.good.values[i]));
    r.slack_good_linf = 2 * lam - gsup;
    r.good_linf = r.slack_good_linf >= -tol * lam;

    r.disjoint = dec.bad.size() == dec.intervals.size();
    for (std::size_t j = 0; j < dec.intervals.size(); ++j) {
        const auto& q = dec.intervals[j].q;
        if (j + 1 < dec.intervals.size() && q.end() > dec.intervals[j + 1].q.begin()) r.disjoint = false;
        if (j < dec.bad.size() && !dec.bad[j].empty() &&
            (dec.bad[j].support_begin() < q.begin() || dec.bad[j].support_end() > q.end()))
            r.disjoint = false;
    }

    r.mean_zero = true;
    r.bad_l1 = true;
    r.maximal = true;
    r.slack_mean = 0;
    r.slack_bad_l1 = dec.intervals.empty() ? 0 : std::numeric_limits<double>::infinity();
    double total = 0;
    for (std::size_t j = 0; j < dec.intervals.size(); ++j) {
        const auto& s = dec.intervals[j];
        const auto& b = dec.bad[j];
        const double mean = std::abs(b.integral(s.q.begin(), s.q.end()));
        r.slack_mean = std::max(r.slack_mean, mean);
        if (mean > tol * std::max(1.0, lam * s.q.length())) r.mean_zero = false;
        const double slack = 4 * lam * s.q.length() - b.l1();
        r.slack_bad_l1 = std::min(r.slack_bad_l1, slack);
        if (slack < -tol * std::max(1.0, lam * s.q.length())) r.bad_l1 = false;
        if (s.parent_average > lam * (1 + tol)) r.maximal = false;
        total += s.q.length();
        const auto [a, e] = s.q.enlarged();
        r.enlarged_ratio = std::max(r.enlarged_ratio, std::abs((e - a) / s.q.length() - 3.0));
    }
    r.slack_measure = fl1 / lam - total;
    r.measure = r.slack_measure >= -tol * std::max(1.0, fl1 / lam);

    // g + sum b_j - f on the common refinement
    std::vector<double> cuts = dec.good.breaks;
    cuts.insert(cuts.end(), dec.input.breaks.begin(), dec.input.breaks.end());
    for (const auto& b : dec.bad) cuts.insert(cuts.end(), b.breaks.begin(), b.breaks.end());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        double v = dec.good(mid) - dec.input(mid);
        for (const auto& b : dec.bad) v += b(mid);
        r.reconstruction_residual = std::max(r.reconstruction_residual, std::abs(v));
    }
    return r;
}

inline std::string format_cz(const CZDecomposition& dec, const CZReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "lambda=" << dec.lambda << "\n";
    os << "input_l1=" << dec.input.l1() << "\n";
    for (const auto& q : dec.roots) os << "root=[" << q.begin() << "," << q.end() << ")\n";
    os << "intervals=" << dec.intervals.size() << "\n";
    for (const auto& s : dec.intervals)
        os << "interval=[" << s.q.begin() << "," << s.q.end() << ") average=" << s.average
           << " parent_average=" << s.parent_average << "\n";
    os << "good_breaks=";
    for (std::size_t i = 0; i < dec.good.breaks.size(); ++i) os << (i ? "," : "") << dec.good.breaks[i];
    os << "\ngood_values=";
    for (std::size_t i = 0; i < dec.good.values.size(); ++i) os << (i ? "," : "") << dec.good.values[i];
    os << "\n";
    auto yn = [](bool b) { return b ? "true" : "false"; };
    os << "prop_i_good_l1=" << yn(r.good_l1) << " slack=" << r.slack_good_l1 << "\n";
    os << "prop_i_good_linf=" << yn(r.good_linf) << " slack=" << r.slack_good_linf << "\n";
    os << "prop_ii_disjoint=" << yn(r.disjoint) << "\n";
    os << "prop_iii_mean_zero=" << yn(r.mean_zero) << " max_abs_mean=" << r.slack_mean << "\n";
    os << "prop_iv_bad_l1=" << yn(r.bad_l1) << " slack=" << r.slack_bad_l1 << "\n";
    os << "prop_v_measure=" << yn(r.measure) << " slack=" << r.slack_measure << "\n";
    os << "maximal=" << yn(r.maximal) << "\n";
    os << "reconstruction_residual=" << r.reconstruction_residual << "\n";
    return os.str();
}

}  // namespace specprop
