// Acceptance gate: runs every criterion at its pinned tolerance and prints one
// pass/fail line per criterion.  Exit code 0 iff all selected criteria pass.

#include <cstdio>
#include <cstring>
#include <string>

#include "accept.hpp"

int main(int argc, char** argv) {
    std::string suite = "all";
    hphi4::accept::Options opt;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        auto next = [&]() -> const char* { return (i + 1 < argc) ? argv[++i] : ""; };
        if (a == "--suite") suite = next();
        else if (a == "--seed") opt.seed = std::strtoull(next(), nullptr, 10);
        else if (a == "--threads") opt.threads = std::atoi(next());
        else if (a == "--quick") opt.quick = true;
        else {
            std::fprintf(stderr, "usage: acceptance [--suite NAME] [--seed S] [--threads T] [--quick]\n");
            return 2;
        }
    }

    std::vector<hphi4::accept::CriterionResult> results;
    try {
        results = hphi4::accept::run_suite(suite, opt);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance: %s\n", e.what());
        return 2;
    }

    std::printf("%-4s %-34s %14s %12s %10s %-4s %8s\n", "id", "criterion", "measured", "target",
                "tol", "", "time");
    int failures = 0;
    for (const auto& r : results) {
        std::printf("[%2d] %-34s %14.8g %12.6g %10.3g %-4s %7.1fs\n", r.id, r.name.c_str(),
                    r.measured, r.target, r.tol, r.pass ? "PASS" : "FAIL", r.seconds);
        if (!r.detail.empty()) std::printf("     %s\n", r.detail.c_str());
        if (!r.pass) ++failures;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failures,
                results.size());
    return failures == 0 ? 0 : 1;
}
