#include <gtest/gtest.h>

#include <random>
#include <set>

#include "specprop/cz.hpp"
#include "specprop/experiments.hpp"

using namespace specprop;

namespace {

// Brute force: every dyadic subinterval of the roots down to the 2^-6 lattice,
// kept when its average exceeds lambda and no strict ancestor below the root does.
std::set<std::pair<int, long long>> brute_force_selection(const StepFunction& f, double lambda,
                                                          const std::vector<DyadicInterval>& roots) {
    std::set<std::pair<int, long long>> out;
    for (const auto& root : roots) {
        for (int k = root.k - 1; k >= -6; --k) {
            const long long per = 1LL << (root.k - k);
            for (long long i = 0; i < per; ++i) {
                DyadicInterval q{k, root.l * per + i};
                const double avg = f.integral(q.begin(), q.end()) / q.length();
                if (!(avg > lambda)) continue;
                bool ancestor_selected = false;
                for (DyadicInterval p = q.parent(); p.k < root.k; p = p.parent())
                    if (f.integral(p.begin(), p.end()) / p.length() > lambda) ancestor_selected = true;
                if (!ancestor_selected) out.insert({q.k, q.l});
            }
        }
    }
    return out;
}

}  // namespace

TEST(CZ, WorkedExample) {
    const auto dec = cz_decompose(StepFunction({0.0, 1.0}, {1.0}), 0.25);
    ASSERT_EQ(dec.roots.size(), 1u);
    EXPECT_EQ(dec.roots[0].begin(), 0.0);
    EXPECT_EQ(dec.roots[0].end(), 4.0);
    ASSERT_EQ(dec.intervals.size(), 1u);
    EXPECT_EQ(dec.intervals[0].q.begin(), 0.0);
    EXPECT_EQ(dec.intervals[0].q.end(), 2.0);
    EXPECT_EQ(dec.intervals[0].average, 0.5);
    EXPECT_EQ(dec.good(1.5), 0.5);
    EXPECT_EQ(dec.good(3.0), 0.0);
    EXPECT_EQ(dec.bad[0](0.5), 0.5);
    EXPECT_EQ(dec.bad[0](1.5), -0.5);
    const auto rep = verify_cz(dec, 0.0);
    EXPECT_TRUE(rep.all());
    EXPECT_EQ(rep.slack_measure, 2.0);
    EXPECT_EQ(rep.reconstruction_residual, 0.0);
}

TEST(CZ, LambdaAboveSupSelectsNothing) {
    const StepFunction f({0.0, 0.5, 1.0}, {3.0, 1.0});
    const auto dec = cz_decompose(f, 3.5);
    EXPECT_TRUE(dec.intervals.empty());
    EXPECT_EQ(dec.good(0.25), 3.0);
    EXPECT_TRUE(verify_cz(dec).all());
}

TEST(CZ, ZeroFunction) {
    const auto dec = cz_decompose(StepFunction({0.0, 1.0}, {0.0}), 1.0);
    EXPECT_TRUE(dec.intervals.empty());
    EXPECT_TRUE(dec.roots.empty());
    EXPECT_TRUE(verify_cz(dec).all());
}

TEST(CZ, SupportStraddlingZeroUsesTwoRoots) {
    const auto dec = cz_decompose(StepFunction({-0.5, 0.5}, {1.0}), 0.5);
    ASSERT_EQ(dec.roots.size(), 2u);
    EXPECT_EQ(dec.roots[0].end(), 0.0);
    EXPECT_TRUE(verify_cz(dec, 0.0).all());
}

TEST(CZ, CorruptedBadPartIsDetected) {
    auto dec = cz_decompose(StepFunction({0.0, 1.0}, {1.0}), 0.25);
    dec.bad[0].values[0] += 0.25;
    const auto rep = verify_cz(dec, 0.0);
    EXPECT_FALSE(rep.mean_zero);
    EXPECT_GT(rep.reconstruction_residual, 0.0);
}

TEST(CZ, ScalingFunctionAndLevelTogetherKeepsIntervals) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 50; ++i) {
        StepFunction f = criteria::random_dyadic_step(rng, 0.0, 4.0);
        const auto a = cz_decompose(f, 0.5);
        for (auto& v : f.values) v *= 2;
        const auto b = cz_decompose(f, 1.0);
        ASSERT_EQ(a.intervals.size(), b.intervals.size());
        for (std::size_t j = 0; j < a.intervals.size(); ++j) {
            EXPECT_EQ(a.intervals[j].q.k, b.intervals[j].q.k);
            EXPECT_EQ(a.intervals[j].q.l, b.intervals[j].q.l);
        }
    }
}

TEST(CZ, MatchesBruteForceAndProperties) {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> scale(-4, 2);
    for (int i = 0; i < 300; ++i) {
        const StepFunction f = criteria::random_dyadic_step(rng, i % 3 == 0 ? -2.0 : 0.0, 4.0);
        const double lambda = std::ldexp(1.0, scale(rng));
        const auto dec = cz_decompose(f, lambda);
        std::set<std::pair<int, long long>> got;
        for (const auto& s : dec.intervals) got.insert({s.q.k, s.q.l});
        EXPECT_EQ(got, brute_force_selection(f, lambda, dec.roots)) << "trial " << i;
        const auto rep = verify_cz(dec, 0.0);
        EXPECT_TRUE(rep.all()) << format_cz(dec, rep);
        EXPECT_EQ(rep.reconstruction_residual, 0.0);
        for (const auto& root : dec.roots) EXPECT_LE(f.integral(root.begin(), root.end()) / root.length(), lambda);
    }
}

TEST(CZ, RejectsBadInput) {
    EXPECT_THROW(cz_decompose(StepFunction({0.0, 1.0}, {-1.0}), 1.0), ArgumentError);
    EXPECT_THROW(cz_decompose(StepFunction({0.0, 1.0}, {1.0}), 0.0), ArgumentError);
    EXPECT_THROW(StepFunction({0.0, 0.0}, {1.0}), ArgumentError);
    EXPECT_THROW(StepFunction({0.0, 1.0}, {1.0, 2.0}), ArgumentError);
}

TEST(Dyadic, ParentAndEnlargement) {
    const DyadicInterval q{-1, -3};
    EXPECT_EQ(q.begin(), -1.5);
    EXPECT_EQ(q.parent().begin(), -2.0);
    EXPECT_EQ(q.parent().end(), -1.0);
    EXPECT_EQ(q.left().end(), q.right().begin());
    const auto [a, b] = q.enlarged();
    EXPECT_EQ(b - a, 3 * q.length());
}
