#pragma once

#include "equicert/bounds.hpp"
#include "equicert/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace equicert {

// Scenario construction from a run configuration: builtin by name, then the
// group-order / kernel / noise overrides applied in that order.
GenerativeSpec scenario_from_config(const RunConfig& cfg);

// Hypothesis family selected by model.family (auto = scenario default).
PredictorFamily family_from_config(const RunConfig& cfg, const GenerativeSpec& spec);

// One row of the property-suite report CSV.
struct SuiteResult {
    std::string suite;
    std::string status;  // pass | fail | skip
    long cases = 0;
    double max_deviation = 0.0;
    std::string detail;
};

// The full property battery on one scenario: group axioms, free action,
// resolver round trip, the three averaging-operator laws, pushforward-KL
// monotonicity, risk non-increase under averaging, and the two
// representative-risk identities.  `reduction_loss` feeds the risk
// non-increase suite (skipped with a reason when it is not convex+bounded
// or the scenario is not enumerable).  corrupt_group swaps in a broken
// composition table to exercise the failure path.
std::vector<SuiteResult> run_property_suites(const GenerativeSpec& spec,
                                             const LossFn& reduction_loss, std::uint64_t seed,
                                             bool corrupt_group);

// Subcommands.  Each creates run.out_dir, writes the resolved configuration
// next to its outputs, and returns the process exit code (0 success,
// 1 property/acceptance failure; config and I/O problems are thrown and
// mapped to 2/3 by the caller).
int cmd_kl_demo(const RunConfig& cfg, const std::string& projection_mode, std::ostream& log);
int cmd_axioms_check(const RunConfig& cfg, std::ostream& log);
int cmd_gen_data(const RunConfig& cfg, std::ostream& log);
int cmd_certify(const RunConfig& cfg, std::ostream& log);
int cmd_compare(const RunConfig& cfg, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, std::ostream& log);

// Exit-code contract shared by the CLI and the integration tests: runs the
// body, mapping ConfigError -> 2, IoError -> 3, any other failure -> 1.
int run_guarded(std::ostream& log, const std::function<int()>& body);

}  // namespace equicert
