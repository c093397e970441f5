#include <gtest/gtest.h>

#include "specprop/lp.hpp"

using namespace specprop;

namespace {

const SpectralGrid kPeriodic(1, 256, kPi);

Field from(const SpectralGrid& g, const std::function<double(double)>& f) {
    Field out(g, Space::Physical);
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = f(g.position(i)[0]);
    return out;
}

double dense_max(const std::function<double(double)>& f, double hi) {
    double best = 0;
    for (int k = 1; k <= 200000; ++k) best = std::max(best, f(hi * k / 200000.0));
    return best;
}

}  // namespace

TEST(Cutoff, KnownValues) {
    EXPECT_EQ(eta(0.5), 1.0);
    EXPECT_EQ(eta(1.0), 1.0);
    EXPECT_EQ(eta(3.0), 0.0);
    EXPECT_EQ(lp_delta(3, 8.0), 1.0);
    EXPECT_EQ(lp_delta(3, 2.0), 0.0);
    EXPECT_EQ(lp_delta(3, 32.0), 0.0);
    EXPECT_EQ(annulus_cutoff(1.0), 1.0);
    EXPECT_EQ(annulus_cutoff(0.2), 0.0);
}

TEST(Cutoff, EtaIsMonotone) {
    double prev = 1.0;
    for (int k = 0; k <= 1000; ++k) {
        const double v = eta(1.0 + k / 1000.0);
        EXPECT_LE(v, prev);
        prev = v;
    }
}

TEST(Bank, PureModeLivesInOneBand) {
    const LPBank bank = build_bank(kPeriodic, highest_band(kPeriodic));
    for (int n = 2; n <= 5; ++n) {
        const Field f = from(kPeriodic, [n](double x) { return std::cos(std::ldexp(1.0, n) * x); });
        for (int k = bank.n_min(); k <= bank.n_max(); ++k) {
            const double sup = max_abs(apply_delta_n(bank, k, f));
            if (k == n)
                EXPECT_NEAR(sup, 1.0, 1e-12);
            else
                EXPECT_LT(sup, 1e-12);
        }
        EXPECT_LT(max_abs(apply_s0(bank, f)), 1e-12);
    }
}

TEST(Bank, ConstantLivesInLowPass) {
    const LPBank bank = build_bank(kPeriodic, 5);
    const Field c = from(kPeriodic, [](double) { return 2.5; });
    EXPECT_NEAR(max_abs(apply_s0(bank, c)), 2.5, 1e-12);
    for (int k = bank.n_min(); k <= bank.n_max(); ++k) EXPECT_LT(max_abs(apply_delta_n(bank, k, c)), 1e-12);
}

TEST(Bank, ReconstructsBandLimitedFields) {
    const LPBank bank = build_bank(kPeriodic, 5);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Field f = band_limited_random(kPeriodic, 0.0, 30.0, seed);
        Field sum = apply_s0(bank, f);
        for (int n = 1; n <= 5; ++n) sum += apply_delta_n(bank, n, f);
        sum -= f;
        EXPECT_LT(max_abs(sum), 1e-10 * max_abs(f));
    }
}

TEST(Bank, RejectsBandsAboveNyquist) {
    EXPECT_THROW(LPBank(kPeriodic, 0, 6), ResolutionError);
    EXPECT_THROW(LPBank(kPeriodic, 3, 2), ArgumentError);
}

TEST(LipschitzLP, SingleAndTwoModeFields) {
    const LPBank bank = build_bank(kPeriodic, 5);
    const Field c8 = from(kPeriodic, [](double x) { return std::cos(8 * x); });
    EXPECT_NEAR(lipschitz_norm_lp(bank, c8, 1.0, LipschitzVariant::Homogeneous).value, 8.0, 1e-10);
    EXPECT_NEAR(lipschitz_norm_lp(bank, c8, 1.0, LipschitzVariant::Inhomogeneous).value, 8.0, 1e-10);
    const Field two = from(kPeriodic, [](double x) { return std::cos(4 * x) + std::cos(32 * x); });
    EXPECT_NEAR(lipschitz_norm_lp(bank, two, 0.5, LipschitzVariant::Homogeneous).value, std::sqrt(32.0), 1e-9);
    const Field zero(kPeriodic, Space::Physical);
    EXPECT_EQ(lipschitz_norm_lp(bank, zero, 0.5, LipschitzVariant::Homogeneous).value, 0.0);
    EXPECT_THROW(lipschitz_norm_lp(bank, c8, 0.0, LipschitzVariant::Homogeneous), ArgumentError);
}

TEST(LipschitzLP, IsHomogeneousOfDegreeOne) {
    const LPBank bank = build_bank(kPeriodic, 5);
    const Field f = band_limited_random(kPeriodic, 1.0, 30.0, 12);
    const double base = lipschitz_norm_lp(bank, f, 0.7, LipschitzVariant::Inhomogeneous).value;
    EXPECT_NEAR(lipschitz_norm_lp(bank, f * Complex(-3.0), 0.7, LipschitzVariant::Inhomogeneous).value, 3 * base,
                1e-10 * base);
}

TEST(LipschitzFD, SineAgainstDenseMaximization) {
    const SpectralGrid g(1, 256, 4 * kPi);
    const Field s = from(g, [](double x) { return std::sin(x); });
    HPlan plan;
    plan.per_octave = 8;
    // second difference of sin over h has sup 4 sin^2(h/2) / h
    const double m1 = dense_max([](double h) { return 4 * std::pow(std::sin(h / 2), 2) / h; }, kPi);
    const double fd1 = lipschitz_norm_fd(s, 1.0, plan);
    EXPECT_LE(fd1, m1 * (1 + 1e-12));
    EXPECT_GT(fd1, 0.99 * m1);
    const double mh = dense_max([](double h) { return 2 * std::sin(h / 2) / std::sqrt(h); }, kPi);
    const double fdh = lipschitz_norm_fd(s, 0.5, plan);
    EXPECT_LE(fdh, mh * (1 + 1e-12));
    EXPECT_GT(fdh, 0.99 * mh);
    EXPECT_NEAR(holder_norm(s, 0, 0.5, plan), 1.0 + fdh, 1e-12);
}

TEST(LipschitzFD, ExactOnSampledIncrements) {
    const SpectralGrid g(1, 256, 4 * kPi);
    const Field s = from(g, [](double x) { return std::sin(x); });
    HPlan plan;
    plan.octaves = 0;
    plan.max_magnitude = 2.0 * g.spacing() * 16;
    const double h = plan.max_magnitude;
    EXPECT_NEAR(lipschitz_norm_fd(s, 0.5, plan), 2 * std::sin(h / 2) / std::sqrt(h), 1e-12);
}

TEST(Holder, ConstantAndErrors) {
    const Field c = from(kPeriodic, [](double) { return -1.25; });
    EXPECT_NEAR(holder_norm(c, 0, 0.3), 1.25, 1e-12);
    EXPECT_NEAR(holder_norm(c, 1, 0.3), 1.25, 1e-12);
    EXPECT_THROW(holder_norm(c, 0, 1.0), ArgumentError);
    EXPECT_THROW(holder_norm_of_order(c, 2.0), ArgumentError);
    EXPECT_THROW(lipschitz_norm_fd(forward_transform(c), 0.5), ArgumentError);
}

TEST(Holder, FirstDerivativeOfSine) {
    const SpectralGrid g(1, 256, 4 * kPi);
    const Field s = from(g, [](double x) { return std::sin(x); });
    HPlan plan;
    plan.per_octave = 8;
    // D sin = cos has the same increment profile as sin
    EXPECT_NEAR(holder_norm_of_order(s, 1.5, plan), holder_norm(s, 0, 0.5, plan), 1e-9);
}

TEST(TimeNorm, ClosedForms) {
    std::vector<double> c(101, 3.0);
    EXPECT_NEAR(lp_time_norm(c, 0.02, 2.0), 3.0 * std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(lp_time_norm(c, 0.02, 4.0), 3.0 * std::pow(2.0, 0.25), 1e-12);
    std::vector<double> t(1001);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = i / 1000.0;
    EXPECT_NEAR(lp_time_norm(t, 1e-3, 2.0), std::sqrt(1.0 / 3.0), 1e-6);
    EXPECT_EQ(lp_time_norm(t, 1e-3, kInfinity), 1.0);
    EXPECT_THROW(lp_time_norm(t, 1e-3, 1.0), ArgumentError);
    t[3] = -1;
    EXPECT_THROW(lp_time_norm(t, 1e-3, 2.0), ArgumentError);
}

TEST(Report, HolderOnlyForFractionalOrder) {
    const LPBank bank = build_bank(kPeriodic, 5);
    const Field f = band_limited_random(kPeriodic, 1.0, 30.0, 2);
    EXPECT_TRUE(std::isnan(norm_report(bank, f, 1.0).holder));
    const auto r = norm_report(bank, f, 0.5);
    EXPECT_FALSE(std::isnan(r.holder));
    EXPECT_EQ(r.bands.size(), static_cast<std::size_t>(bank.n_max() - bank.n_min() + 1));
    EXPECT_GE(r.lambda_inhom, r.s0_sup);
}
