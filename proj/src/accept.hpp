#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hphi4::accept {

struct CriterionResult {
    int id = 0;
    std::string name;
    double measured = 0.0;
    double target = 0.0;
    double tol = 0.0;
    bool pass = false;
    bool forced_fail = false;  // a sub-check failed regardless of the headline scalar
    double seconds = 0.0;
    std::string detail;
};

struct Options {
    uint64_t seed = 1;
    bool quick = false;
    int threads = 1;
};

// Suites: profiles (1-5), lattice (6), flow (7-10,16), saw (11-12),
// exactrg (13-15), all.
std::vector<CriterionResult> run_suite(const std::string& suite, const Options& opt);

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace hphi4::accept
