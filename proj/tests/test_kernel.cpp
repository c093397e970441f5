#include <gtest/gtest.h>

#include "specprop/kernel.hpp"

using namespace specprop;

namespace {

double heat(double x, double t) { return std::exp(-x * x / (4 * t)) / std::sqrt(4 * kPi * t); }

double max_deviation(const Field& k, const std::function<double(double)>& exact) {
    double worst = 0;
    for (std::size_t i = 0; i < k.size(); ++i)
        worst = std::max(worst, std::abs(k.values[i] - exact(k.grid.position(i)[0])));
    return worst;
}

const auto kHeat = SymbolSpec::fractional_laplacian(1, 2.0, 1.0);

}  // namespace

TEST(Propagator, ClosedFormValues) {
    const SpectralGrid g(1, 64, kPi);
    const Field e = propagator(kHeat, 0.0, 1.0, g);
    const Field same = propagator(kHeat, 0.4, 0.4, g);
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double xi = g.frequency(i)[0];
        if (std::abs(xi) == 1.0) EXPECT_NEAR(e.values[i].real(), 0.36787944117144233, 1e-15);
        if (xi == 0.0) EXPECT_EQ(e.values[i], Complex(1.0));
        EXPECT_EQ(same.values[i], Complex(1.0));
    }
}

TEST(Kernel, HeatKernelMatchesGaussian) {
    const auto g = SpectralGrid::standard(1);
    const Field k = kernel_p(kHeat, {0, 0.0, {0, 0, 0}, 0.0, 1.0}, g);
    EXPECT_NEAR(k.values[g.n / 2].real(), 0.28209479177387814, 1e-12);
    EXPECT_LT(max_deviation(k, [](double x) { return heat(x, 1.0); }), 1e-12);
}

TEST(Kernel, PoissonKernelOnWideGrid) {
    const SpectralGrid g(1, 2048, 128.0);
    const Field k = kernel_p(SymbolSpec::fractional_laplacian(1, 1.0, 1.0), {0, 0.0, {0, 0, 0}, 0.0, 1.0}, g);
    EXPECT_NEAR(k.values[g.n / 2].real() * kPi, 1.0, 1e-4);
    EXPECT_NEAR(kernel_norms(k).l1, 1.0, 1e-4);
}

TEST(Kernel, FrequencyPowerIsMinusSecondDerivative) {
    const auto g = SpectralGrid::standard(1);
    const Field k = kernel_p(kHeat, {0, 2.0, {0, 0, 0}, 0.0, 1.0}, g);
    // -d^2/dx^2 of the Gaussian, differentiated by hand
    EXPECT_LT(max_deviation(k, [](double x) { return heat(x, 1.0) * (0.5 - x * x / 4); }), 1e-12);
    EXPECT_NEAR(k.values[g.n / 2].real(), 0.14104739588693907, 1e-12);
}

TEST(Kernel, TimeDerivativeSolvesHeatEquation) {
    const auto g = SpectralGrid::standard(1);
    const Field k = kernel_p(kHeat, {1, 0.0, {0, 0, 0}, 0.25, 1.25}, g);
    EXPECT_LT(max_deviation(k, [](double x) { return heat(x, 1.0) * (x * x / 4 - 0.5); }), 1e-12);
}

TEST(Kernel, MomentRouteMatchesFiniteDifferenceRoute) {
    const auto g = SpectralGrid::standard(1);
    const KernelRequest req{0, 0.0, {1, 0, 0}, 0.0, 1.0};
    const Field a = kernel_p(kHeat, req, g);
    const Field b = kernel_p_finite_difference(kHeat, req, g);
    Field diff = a;
    diff -= b;
    EXPECT_LT(max_abs(diff), 1e-6 * max_abs(a));
    // -i x G(x)
    double worst = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = g.position(i)[0];
        worst = std::max(worst, std::abs(a.values[i] - Complex(0, -x * heat(x, 1.0))));
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(Kernel, RescaledHeatKernelIsFixed) {
    const auto g = SpectralGrid::standard(1);
    const Field ref = kernel_p(kHeat, {0, 0.0, {0, 0, 0}, 0.0, 1.0}, g);
    for (double gap : {0.125, 0.5, 2.0}) {
        Field q = kernel_q(kHeat, {0, 0.0, {0, 0, 0}, 1.0, 1.0 + gap}, g);
        q -= ref;
        EXPECT_LT(max_abs(q), 1e-12);
    }
}

TEST(Kernel, RescaledMomentKernelIsUniformlyBounded) {
    const auto g = SpectralGrid::standard(1);
    const auto two = SymbolSpec::fractional_laplacian(1, 2.0, 0.5, TimeProfile({{0.0, 1.0}, {0.5, 0.5}}));
    const double constant_case = std::sqrt(2.0) * std::exp(-0.5) / std::sqrt(4 * kPi);
    for (double gap : {1.0 / 64, 1.0 / 8, 0.5, 1.0}) {
        const KernelRequest req{0, 0.0, {1, 0, 0}, 0.5 - gap / 2, 0.5 + gap / 2};
        // grid sampling of a peak at x = sqrt(2)
        EXPECT_NEAR(max_abs(kernel_q(kHeat, req, g)), constant_case, 1e-3);
        EXPECT_LT(max_abs(kernel_q(two, req, g)), 2 * constant_case / 0.5);
    }
}

TEST(Kernel, ScalingIdentityForPowerKernel) {
    const SpectralGrid g(1, 2048, 16.0);
    for (double gap : {0.25, 0.5, 1.0}) {
        const KernelRequest req{0, 2.0, {0, 0, 0}, 0.0, gap};
        const double lp = kernel_norms(kernel_p(kHeat, req, g)).l1;
        const double lq = kernel_norms(kernel_q(kHeat, req, g)).l1;
        // L1 by Riemann sum of a sign-changing kernel
        EXPECT_NEAR(lq / (gap * lp), 1.0, 1e-4);
    }
}

TEST(KernelNorms, HeatKernelHasUnitMass) {
    const auto g = SpectralGrid::standard(1);
    EXPECT_NEAR(kernel_norms(kernel_p(kHeat, {0, 0.0, {0, 0, 0}, 0.0, 1.0}, g)).l1, 1.0, 1e-6);
    EXPECT_NEAR(kernel_norms(kernel_p(SymbolSpec::fractional_laplacian(2, 2.0, 1.0), {0, 0.0, {0, 0, 0}, 0.0, 1.0}, SpectralGrid::standard(2))).l1,
                1.0, 1e-6);
}

TEST(KernelNorms, ZeroFieldHasZeroNorms) {
    const Field zero(SpectralGrid::standard(1), Space::Physical);
    const auto n = kernel_norms(zero, WeightRequest{0.25, 2.0, 0, 0.0});
    EXPECT_EQ(n.l1, 0.0);
    EXPECT_EQ(n.l2, 0.0);
    EXPECT_EQ(*n.weighted_l2, 0.0);
    EXPECT_THROW(kernel_norms(zero, WeightRequest{0.9, 2.0, 0, 0.0}), ArgumentError);
}

TEST(KernelNorms, TailBoundDominatesMassOutsideWindow) {
    const auto g = SpectralGrid::standard(1);
    const Field k = kernel_p(SymbolSpec::fractional_laplacian(1, 1.0, 1.0), {0, 0.0, {0, 0, 0}, 0.0, 1.0}, g);
    const auto n = kernel_norms(k, WeightRequest{0.25, 1.0, 0, 0.0});
    // free-space Poisson mass beyond |x| = L is 1 - (2/pi) atan(L)
    EXPECT_GT(*n.tail_bound, 1.0 - 2.0 / kPi * std::atan(g.half_width));
}

TEST(Decay, ConstantProfileSlopes) {
    const auto g = SpectralGrid::standard(1);
    const std::vector<double> gaps{0.25, 0.5, 1.0, 2.0};
    EXPECT_NEAR(l1_decay_fit(kHeat, 0, 0.0, gaps, g).slope, 0.0, 1e-9);
    EXPECT_NEAR(l1_decay_fit(kHeat, 0, 2.0, gaps, g).slope, -1.0, 2e-3);
    EXPECT_NEAR(l1_decay_fit(kHeat, 1, 2.0, gaps, g).slope, -2.0, 2e-3);
}

TEST(Decay, UnresolvedGapIsReported) {
    const auto g = SpectralGrid::standard(1);
    EXPECT_THROW(l1_decay_fit(kHeat, 0, 0.0, {1e-4, 1e-3, 1e-2, 1e-1}, g), ResolutionError);
}

TEST(Kernel, RejectsInvalidRequests) {
    const auto g = SpectralGrid::standard(1);
    EXPECT_THROW(kernel_p(kHeat, {0, 0.0, {0, 0, 0}, 1.0, 1.0}, g), ArgumentError);
    EXPECT_THROW(kernel_p(kHeat, {-1, 0.0, {0, 0, 0}, 0.0, 1.0}, g), ArgumentError);
    EXPECT_THROW(kernel_p(kHeat, {0, 0.0, {2, 0, 0}, 0.0, 1.0}, g), ArgumentError);
    EXPECT_THROW(kernel_p(kHeat, {0, 0.0, {0, 0, 0}, 0.0, 1.0}, SpectralGrid::standard(2)), ArgumentError);
}
