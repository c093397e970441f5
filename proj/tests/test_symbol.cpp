#include <gtest/gtest.h>

#include <random>

#include "specprop/symbol.hpp"

using namespace specprop;

namespace {

Complex at(const SymbolSpec& s, double t, std::vector<double> xi) { return s.eval(t, Vec(xi)); }

}  // namespace

TEST(Symbol, FractionalLaplacianValues) {
    EXPECT_NEAR(at(SymbolSpec::fractional_laplacian(1, 2.0, 1.0), 0.3, {1.0}).real(), -1.0, 1e-15);
    const Complex v = at(SymbolSpec::fractional_laplacian(2, 1.0, 1.0), 0.3, {1.2, 1.6});
    EXPECT_NEAR(v.real(), -2.0, 1e-14);
    EXPECT_EQ(v.imag(), 0.0);
}

TEST(Symbol, ZeroFrequencyIsZeroForBuiltins) {
    const TimeProfile prof({{0.0, 1.0}, {0.5, 0.5}});
    for (const auto& s : {SymbolSpec::fractional_laplacian(2, 1.5, 0.5, prof),
                          SymbolSpec::complex_rotation(2, 1.5, 0.5, 0.8, prof),
                          SymbolSpec::anisotropic_sum(2, 1.5, 0.5, {1.0, 2.0}, prof)})
        EXPECT_EQ(at(s, 0.7, {0.0, 0.0}), Complex(0.0));
}

TEST(Symbol, IntegralOfConstantProfile) {
    const auto s = SymbolSpec::complex_rotation(1, 1.5, 0.5, 0.5, TimeProfile::constant(1.5));
    std::vector<double> xi{2.0};
    const Complex expected = 0.35 * at(s, 0.0, xi);
    const Complex got = s.integrate(0.1, 0.45, Vec(xi));
    EXPECT_NEAR(std::abs(got - expected), 0.0, 1e-13);
    EXPECT_EQ(s.integrate(0.4, 0.4, Vec(xi)), Complex(0.0));
}

TEST(Symbol, IntegralOfTwoPieceProfile) {
    const auto s = SymbolSpec::fractional_laplacian(1, 2.0, 0.5, TimeProfile({{0.0, 1.0}, {0.5, 0.5}}));
    std::vector<double> xi{2.0};
    EXPECT_NEAR(s.integrate(0.0, 1.0, Vec(xi)).real(), -3.0, 1e-14);
}

TEST(Symbol, IntegralIsAdditive) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 2.0), lv(0.5, 2.0);
    const TimeProfile prof({{0.0, lv(rng)}, {0.3, lv(rng)}, {0.9, lv(rng)}, {1.4, lv(rng)}});
    const auto s = SymbolSpec::complex_rotation(1, 1.3, 0.5, 0.4, prof);
    std::vector<double> xi{1.7};
    for (int i = 0; i < 50; ++i) {
        double a = u(rng), b = u(rng), c = u(rng);
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        const Complex whole = s.integrate(a, c, Vec(xi));
        const Complex parts = s.integrate(a, b, Vec(xi)) + s.integrate(b, c, Vec(xi));
        EXPECT_NEAR(std::abs(whole - parts), 0.0, 1e-12);
    }
}

TEST(Symbol, TabulatedMidpointQuadratureMatchesExactIntegral) {
    // psi = -(1 + t) |xi|^2: exact integral over [0, 1] is -1.5 |xi|^2
    const auto s = SymbolSpec::tabulated(1, 2.0, 0.5,
                                         [](double t, Vec xi) { return Complex(-(1 + t) * xi[0] * xi[0]); }, 64);
    std::vector<double> xi{2.0};
    EXPECT_NEAR(s.integrate(0.0, 1.0, Vec(xi)).real(), -6.0, 1e-12);
}

TEST(Symbol, AdjointOfRadialSymbolsIsTheSymbol) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    const auto fl = SymbolSpec::fractional_laplacian(2, 1.5, 0.5);
    const auto cr = SymbolSpec::complex_rotation(2, 1.5, 0.5, -0.9);
    for (int i = 0; i < 20; ++i) {
        std::vector<double> xi{n01(rng), n01(rng)};
        EXPECT_EQ(fl.adjoint(0.2, Vec(xi)), fl.eval(0.2, Vec(xi)));
        EXPECT_NEAR(std::abs(cr.adjoint(0.2, Vec(xi)) - cr.eval(0.2, Vec(xi))), 0.0, 1e-14);
    }
}

TEST(Symbol, AdjointOfNonRadialTabulatedSymbol) {
    const auto s = SymbolSpec::tabulated(
        1, 2.0, 0.5, [](double, Vec xi) { return Complex(-xi[0] * xi[0], xi[0] * std::abs(xi[0])); });
    std::vector<double> xi{1.0};
    const Complex a = s.adjoint(0.0, Vec(xi));
    EXPECT_DOUBLE_EQ(a.real(), -1.0);
    EXPECT_DOUBLE_EQ(a.imag(), -1.0);
}

TEST(Symbol, EllipticityHoldsOnRandomSamples) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> t(0.0, 2.0);
    const double nu = 0.5;
    const TimeProfile prof({{0.0, 0.5}, {0.7, 2.0}, {1.2, 1.0}});
    for (const auto& s : {SymbolSpec::fractional_laplacian(3, 1.2, nu, prof),
                          SymbolSpec::complex_rotation(3, 1.2, nu, 1.5, prof),
                          SymbolSpec::anisotropic_sum(3, 1.2, nu, {1.0, 1.5, 2.0}, prof)}) {
        for (int i = 0; i < 200; ++i) {
            std::vector<double> xi{3 * n01(rng), 3 * n01(rng), 3 * n01(rng)};
            const double r = norm2(Vec(xi));
            EXPECT_LE(s.eval(t(rng), Vec(xi)).real(), -nu * std::pow(r, 1.2) * (1 - 1e-12)) << s.describe();
        }
    }
}

TEST(Symbol, RejectsInadmissibleParameters) {
    EXPECT_THROW(SymbolSpec::fractional_laplacian(4, 2.0, 1.0), ConfigurationError);
    EXPECT_THROW(SymbolSpec::fractional_laplacian(1, 2.0, 0.5, TimeProfile::constant(3.0)), ConfigurationError);
    EXPECT_THROW(SymbolSpec::complex_rotation(1, 2.0, 0.5, 10.0), ConfigurationError);
    EXPECT_THROW(SymbolSpec::anisotropic_sum(2, 2.0, 0.5, {1.0}), ConfigurationError);
    EXPECT_THROW(TimeProfile({{0.1, 1.0}}), ConfigurationError);
    EXPECT_THROW(TimeProfile({{0.0, 1.0}, {0.0, 1.0}}), ConfigurationError);
    std::vector<double> xi{1.0, 2.0};
    EXPECT_THROW(SymbolSpec::fractional_laplacian(1, 2.0, 1.0).eval(0, Vec(xi)), ArgumentError);
    std::vector<double> one{1.0};
    EXPECT_THROW(SymbolSpec::tabulated(1, 2.0, 1.0).eval(0, Vec(one)), ConfigurationError);
}

TEST(Symbol, KindNamesRoundTrip) {
    for (auto k : {SymbolKind::FractionalLaplacian, SymbolKind::ComplexRotation, SymbolKind::AnisotropicSum,
                   SymbolKind::Tabulated})
        EXPECT_EQ(parse_symbol_kind(to_string(k)), k);
    EXPECT_THROW(parse_symbol_kind("laplace"), ConfigurationError);
}

TEST(Validation, HeatSymbolPasses) {
    const auto rep = validate_symbol(SymbolSpec::fractional_laplacian(1, 2.0, 1.0));
    EXPECT_TRUE(rep.passed);
    EXPECT_EQ(rep.d0, 1);
}

TEST(Validation, SubEllipticTabulatedSymbolFails) {
    const double nu = 1.0;
    const auto s = SymbolSpec::tabulated(1, 2.0, nu, [](double, Vec xi) { return Complex(-std::abs(xi[0])); });
    // direct oracle at |xi| = 4: -Re psi = 4 < nu * 16
    std::vector<double> xi{4.0};
    EXPECT_GT(s.eval(0, Vec(xi)).real(), -nu * 16.0);
    const auto rep = validate_symbol(s);
    EXPECT_FALSE(rep.passed);
    EXPECT_LT(rep.worst_sym1_margin, 0.0);
}

TEST(Validation, OrderOfDerivativeCheckFollowsDimension) {
    EXPECT_EQ(validate_symbol(SymbolSpec::fractional_laplacian(3, 2.0, 1.0)).d0, 2);
    EXPECT_EQ(validate_symbol(SymbolSpec::fractional_laplacian(2, 2.0, 1.0)).d0, 2);
}

TEST(Validation, ReportIsKeyValueBlock) {
    const std::string text = format_report(validate_symbol(SymbolSpec::fractional_laplacian(1, 1.0, 1.0)));
    EXPECT_NE(text.find("passed=true\n"), std::string::npos);
    EXPECT_NE(text.find("d0=1\n"), std::string::npos);
}
