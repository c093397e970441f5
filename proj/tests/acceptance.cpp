// Runs the acceptance suite in-process twice and prints one line per criterion.
// Usage: acceptance [output-root] [--full]

#include <chrono>
#include <cstring>
#include <iostream>
#include <map>

#include "specprop/experiments.hpp"

using namespace specprop;

int main(int argc, char** argv) {
    namespace fs = std::filesystem;
    fs::path root = "acceptance_out";
    bool full = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--full") == 0)
            full = true;
        else
            root = argv[i];
    }

    Config config;
    RunContext ctx = context_from_config(config, 1);
    ctx.full = full;

    // per-criterion wall-clock limits, seconds
    const std::map<int, double> limits{{1, 5.0}, {2, 60.0}};
    std::map<int, double> elapsed;
    auto last = std::chrono::steady_clock::now();
    bool ok = true;
    auto report = [&](const CriterionResult& r) {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last).count();
        last = now;
        elapsed[r.id] = s;
        bool pass = r.passed;
        std::string timing;
        if (auto it = limits.find(r.id); it != limits.end()) {
            pass = pass && s < it->second;
            timing = "; seconds=" + fmt(s) + " < " + fmt(it->second);
        }
        ok = ok && pass;
        std::cout << "criterion " << r.id << " " << r.name << ": " << (pass ? "PASS" : "FAIL") << " | " << r.detail
                  << timing << std::endl;
    };

    const SuiteRun first = run_suite(ctx, report);
    write_bundle(first.bundle, root / "run1");
    const SuiteRun second = run_suite(ctx);
    write_bundle(second.bundle, root / "run2");

    std::string diff;
    const bool same = directories_identical(root / "run1", root / "run2", &diff);
    const double budget = full ? 1800.0 : 120.0;
    const bool pass = same && first.seconds < budget && second.seconds < budget;
    ok = ok && pass;
    std::cout << "criterion 14 " << determinism_name() << ": " << (pass ? "PASS" : "FAIL")
              << " | identical=" << (same ? "true" : "false (" + diff + ")") << "; seconds=" << fmt(first.seconds)
              << "," << fmt(second.seconds) << " < " << fmt(budget) << std::endl;
    std::cout << (ok ? "acceptance: all 14 criteria passed" : "acceptance: FAILED") << std::endl;
    return ok ? 0 : 1;
}
