#pragma once

#include "equicert/loss.hpp"
#include "equicert/measures.hpp"
#include "equicert/predictor.hpp"
#include "equicert/scenario.hpp"

#include <vector>

namespace equicert {

struct RiskEstimate {
    double value = 0.0;
    bool exact = true;       // enumeration/closed form vs Monte Carlo
    double std_error = 0.0;  // 0 for exact paths
    long n_samples = 0;      // atoms enumerated or draws taken
    std::uint64_t seed = 0;  // 0 for exact paths

    const char* method() const { return exact ? "exact-enumeration" : "monte-carlo"; }
};

double empirical_risk(const PredictorFn& f, const LossFn& loss, const Dataset& data);

// Empirical risk over a representative sample; every row must be canonical
// under the resolver (error names the offending row).
double empirical_risk_on_representatives(const PredictorFn& f, const LossFn& loss,
                                         const Dataset& data, const OrbitResolver& resolver);

RiskEstimate true_risk_enumerate(const PredictorFn& f, const LossFn& loss,
                                 const GenerativeSpec& spec);
RiskEstimate true_risk_mc(const PredictorFn& f, const LossFn& loss, const GenerativeSpec& spec,
                          long n_draws, std::uint64_t seed);
// Risk against the law of (X_phi, Y_phi) instead of (X, Y).
RiskEstimate representative_risk_enumerate(const PredictorFn& f, const LossFn& loss,
                                           const GenerativeSpec& spec);

// Discrete law of the loss value under f: (loss value, probability), merged
// over atoms whose values agree within `value_tol` and sorted by value.
std::vector<std::pair<double, double>> loss_distribution(const PredictorFn& f, const LossFn& loss,
                                                         const std::vector<JointAtom>& atoms,
                                                         double value_tol = 1e-12);

// What risk the posterior expectation ranges over.
struct RiskTarget {
    enum class Kind { empirical_full, empirical_representative, true_enumerated,
                      representative_enumerated } kind;
    const Dataset* data = nullptr;           // empirical kinds
    const OrbitResolver* resolver = nullptr; // canonical validation for representative data
    const GenerativeSpec* spec = nullptr;    // enumerated kinds

    static RiskTarget empirical(const Dataset& d);
    static RiskTarget empirical_representatives(const Dataset& d, const OrbitResolver& r);
    static RiskTarget true_risk(const GenerativeSpec& s);
    static RiskTarget representative_risk(const GenerativeSpec& s);
};

// E_{w ~ posterior} [risk(f_w)].  Because families are linear in their
// parameters, each atom's prediction is a scalar Gaussian, so squared,
// clipped-squared and zero-one losses admit closed forms (exact = true).
// Other losses, or prefer_exact = false, fall back to n_models Monte Carlo
// parameter draws with per-draw seeds derived from (seed, index) and a
// reported standard error.
RiskEstimate posterior_expected_risk(const GaussianMeasure& posterior,
                                     const PredictorFamily& family, const LossFn& loss,
                                     const RiskTarget& target, int n_models, std::uint64_t seed,
                                     bool prefer_exact = true);

// Closed-form E[loss(z, y)] for z ~ N(mean, sd^2); exposed for oracle tests.
double gaussian_expected_loss(const LossFn& loss, double mean, double sd, double y);

}  // namespace equicert
