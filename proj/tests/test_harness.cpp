#include <gtest/gtest.h>

#include <sstream>

#include "specprop/experiments.hpp"

using namespace specprop;

namespace {

Config with(std::initializer_list<std::pair<std::string, std::string>> kv) {
    Config c;
    for (const auto& [k, v] : kv) c.set(k, v);
    return c;
}

std::string file(const Bundle& b, const std::string& name) {
    for (const auto& a : b.files)
        if (a.name == name) return a.content;
    return "";
}

std::string summary_value(const Bundle& b, const std::string& key) {
    std::istringstream in(b.summary);
    std::string line;
    while (std::getline(in, line))
        if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
    return "";
}

}  // namespace

TEST(Config, ParsesSectionsCommentsAndLists) {
    Config c;
    std::istringstream in("# sample\nsymbol.gamma = 1.5  # trailing\n\nexperiment.gaps = 0.5, 1 ,2\n");
    c.parse(in);
    EXPECT_EQ(c.get_double("symbol.gamma"), 1.5);
    EXPECT_EQ(c.get_list("experiment.gaps"), (std::vector<double>{0.5, 1.0, 2.0}));
    EXPECT_EQ(c.get_int("grid.n"), 256);
}

TEST(Config, RejectsMalformedInput) {
    Config c;
    std::istringstream unknown("grid.size = 3\n");
    EXPECT_THROW(c.parse(unknown), ConfigurationError);
    std::istringstream no_eq("grid.n 3\n");
    EXPECT_THROW(c.parse(no_eq), ConfigurationError);
    c.set("grid.n", "abc");
    EXPECT_THROW(c.get_int("grid.n"), ConfigurationError);
    EXPECT_THROW(c.load("/nonexistent/file.cfg"), ConfigurationError);
}

TEST(Config, EnvironmentOverrides) {
    Config c;
    std::string a = "SPECPROP_TIME_STEPS=64", b = "SPECPROP_SYMBOL_NU=0.5", other = "HOME=/root";
    char* env[] = {a.data(), b.data(), other.data(), nullptr};
    c.apply_environment(env);
    EXPECT_EQ(c.get_int("time.steps"), 64);
    EXPECT_EQ(c.get_double("symbol.nu"), 0.5);
}

TEST(Config, HashTracksContent) {
    Config a, b;
    EXPECT_EQ(a.hash(), b.hash());
    b.set("experiment.m", "0.5");
    EXPECT_NE(a.hash(), b.hash());
    EXPECT_EQ(a.hash().size(), 16u);
}

TEST(Config, NamedSymbolsAndProfiles) {
    const Config c = with({{"symbol.kind", "complex-rotation"}, {"symbol.rho", "0.4"}, {"symbol.gamma", "1.5"},
                           {"symbol.nu", "0.5"}, {"symbol.profile", "0:1,0.5:0.5"}});
    const auto s = symbol_from_config(c);
    EXPECT_EQ(s.kind(), SymbolKind::ComplexRotation);
    EXPECT_EQ(s.profile().pieces().size(), 2u);
    EXPECT_THROW(parse_profile("0:1,x"), ConfigurationError);
}

TEST(Validate, RejectsInadmissibleCombinations) {
    EXPECT_NO_THROW(validate_config(Config{}));
    EXPECT_THROW(validate_config(with({{"experiment.family", "holder"}, {"symbol.gamma", "1.5"},
                                       {"experiment.alpha", "0.5"}})),
                 ConfigurationError);
    EXPECT_THROW(validate_config(with({{"experiment.p", "1"}})), ConfigurationError);
    EXPECT_THROW(validate_config(with({{"grid.d", "2"}})), ConfigurationError);
    EXPECT_THROW(validate_config(with({{"experiment.name", "norm-equivalence"}, {"ensemble.n", "64"}})),
                 ConfigurationError);
    EXPECT_NO_THROW(validate_config(with({{"experiment.name", "kernel-decay"}, {"ensemble.n", "64"}})));
}

TEST(Experiment, UnknownNameIsConfigurationError) {
    try {
        run_experiment(with({{"experiment.name", "spectral-gap"}}));
        FAIL();
    } catch (const ConfigurationError& e) {
        EXPECT_NE(std::string(e.what()).find("spectral-gap"), std::string::npos);
    }
}

TEST(Experiment, KernelDecayReportsSlope) {
    const auto b = run_experiment(with({{"experiment.b", "2"}, {"experiment.gaps", "0.25,0.5,0.75,1"}}));
    EXPECT_NEAR(std::stod(summary_value(b, "slope")), -1.0, 5e-3);
    EXPECT_EQ(summary_value(b, "expected_slope"), "-1");
    const std::string csv = file(b, "kernel_decay.csv");
    EXPECT_EQ(csv.rfind("gap,l1,l2,weighted_l2,slope_so_far,config_hash,seed\n", 0), 0u);
}

TEST(Experiment, EveryRowCarriesHashAndSeed) {
    const Config c = with({{"experiment.name", "cz"}, {"experiment.ensemble_size", "20"}, {"experiment.seed", "7"}});
    const auto b = run_experiment(c);
    EXPECT_TRUE(b.passed);
    std::istringstream in(file(b, "cz.csv"));
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_NE(line.find("," + c.hash() + ",7"), std::string::npos);
    }
    EXPECT_EQ(rows, 20);
}

TEST(Experiment, VerifyEstimateTable) {
    const auto b = run_experiment(with({{"experiment.name", "verify-estimate"}, {"experiment.p", "inf"},
                                        {"experiment.ensemble_size", "3"}, {"time.steps", "16"}}));
    EXPECT_GT(std::stod(summary_value(b, "max_ratio")), 0.0);
    EXPECT_EQ(file(b, "estimate.csv").rfind("member,numerator,denominator,ratio,", 0), 0u);
}

TEST(Experiment, SameConfigGivesIdenticalBytes) {
    const Config c = with({{"experiment.name", "weak11"}, {"experiment.ensemble_size", "2"}, {"time.steps", "16"}});
    std::string diff;
    EXPECT_TRUE(bundles_identical(run_experiment(c, 1), run_experiment(c, 2), &diff)) << diff;
    Config other = c;
    other.set("experiment.seed", "2");
    EXPECT_FALSE(bundles_identical(run_experiment(c), run_experiment(other)));
}

TEST(Suite, CriteriaAreNumberedOneToThirteen) {
    const auto& list = criteria_list();
    ASSERT_EQ(list.size(), 13u);
    for (std::size_t i = 0; i < list.size(); ++i) EXPECT_EQ(list[i].id, static_cast<int>(i + 1));
}

TEST(Suite, DirectoriesCompareByBytes) {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "specprop_harness_test";
    fs::remove_all(root);
    Bundle b;
    b.files.push_back({"a.csv", "x,y\n1,2\n"});
    write_bundle(b, root / "one");
    write_bundle(b, root / "two");
    std::string diff;
    EXPECT_TRUE(directories_identical(root / "one", root / "two", &diff)) << diff;
    b.files[0].content += "3,4\n";
    write_bundle(b, root / "two");
    EXPECT_FALSE(directories_identical(root / "one", root / "two", &diff));
    fs::remove_all(root);
}
