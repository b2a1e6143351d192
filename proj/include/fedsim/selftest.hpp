#pragma once
#include <string>
#include <vector>

namespace fedsim::selftest {

struct BatteryResult {
    std::string name;
    bool pass;
    std::string detail; // non-empty on failure
};

// Fast invariant batteries: hyperbolic geometry identities, gradient
// checks on tiny models, aggregation identities, partition laws, rng
// determinism. Completes in well under a minute.
std::vector<BatteryResult> run_all();

} // namespace fedsim::selftest
