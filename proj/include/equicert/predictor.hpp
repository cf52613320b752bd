#pragma once

#include "equicert/group.hpp"
#include "equicert/kernel.hpp"

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

namespace equicert {

using PredictorFn = std::function<double(const Vec&)>;

// Sparse feature: list of (parameter index, coefficient).
using Feature = std::vector<std::pair<int, double>>;

enum class FamilyBase { linear, tabular };

// Every family here is linear in its parameters: f_w(x) = <w, phi(x)> with a
// sparse feature map phi.  That single fact powers least-squares priors,
// exact Gaussian risk formulas, and parameter-space projections, so it is
// the family contract rather than an implementation detail.
//
// Bases: linear (phi(x) = x) and tabular (one-hot over an enumerated input
// set).  Either base can be "tied": groups of base weights share one free
// parameter, which is how equivariant submodels are expressed.
class PredictorFamily {
public:
    static PredictorFamily linear(int input_dim);
    static PredictorFamily tabular(std::vector<Vec> inputs);
    // tie_class[i] in {0..n_classes-1} assigns base weight i to a shared
    // parameter.
    PredictorFamily tied(std::vector<int> tie_class) const;

    FamilyBase base() const { return base_; }
    bool is_tied() const { return !tie_.empty(); }
    int input_dim() const { return input_dim_; }
    int base_dim() const { return base_dim_; }
    int param_dim() const { return param_dim_; }
    const std::vector<Vec>& inputs() const;  // tabular only
    const std::vector<int>& tie_classes() const { return tie_; }

    // Throws UnknownInputError for tabular inputs off the enumerated set.
    Feature feature(const Vec& x) const;
    double eval(const Vec& params, const Vec& x) const;
    PredictorFn predictor(Vec params) const;

    // base_dim x param_dim matrix with T[i, tie[i]] = 1 (identity when
    // untied); maps free parameters to base weights.
    Mat tying_matrix() const;

    std::string describe() const;

private:
    PredictorFamily() = default;
    int lookup(const Vec& x) const;

    FamilyBase base_ = FamilyBase::linear;
    int input_dim_ = 0;
    int base_dim_ = 0;
    int param_dim_ = 0;
    std::vector<int> tie_;
    std::vector<Vec> inputs_;
    // Quantized coordinate hash -> input index, with a linear re-scan on
    // miss to absorb float noise from composed group actions.
    std::unordered_map<std::uint64_t, int> index_;
};

// Group-averaged version of an arbitrary predictor: resolve the input to
// (representative, group part), then take the kernel-weighted sum of f over
// the orbit.  With the trivial output action the group part only enters
// through the resolution step.
PredictorFn average_function(PredictorFn f, const GroupKernel& kernel,
                             const OrbitResolver& resolver);

// Inputs for auditing operator properties.  Tabular families audit on their
// full enumerated set; otherwise Gaussian probes (with margins zeroed for
// shift actions so every kernel-support element can act).
std::vector<Vec> audit_probes(const PredictorFamily& family, const GroupAction& action,
                              const GroupKernel& kernel, int count, std::uint64_t seed);

struct ParameterProjection {
    Mat matrix;              // param_dim x param_dim, idempotent
    std::string provenance;  // which registry rule produced it
};

// Parameter-space matrix a with f_{a w} = averaged f_w, certified by an
// explicit registry:
//   - tabular, any kernel over the same group;
//   - untied linear, uniform kernel, orthogonal input representation;
//   - tied families whose shared-weight pattern is already equivariant
//     (projection = identity on the free parameters).
// Combinations outside the registry, and registry hits that fail the
// post-construction audit, throw ClosureNotCertifiedError.
ParameterProjection build_parameter_projection(const PredictorFamily& family,
                                               const GroupAction& action,
                                               const GroupKernel& kernel,
                                               const OrbitResolver& resolver);

struct PropertyReport {
    bool pass = true;
    double max_deviation = 0.0;
    long cases = 0;
    std::string detail;  // first violation, human-readable
};

// f is constant on each probe's reachable orbit {g.x_phi} (trivial output
// action folds equivariance into invariance).  Orbits are walked from the
// representative so every evaluation stays inside the decomposable domain
// even when the action is partial (bounded shift windows).
PropertyReport check_equivariant(const PredictorFn& f, const OrbitResolver& resolver,
                                 const std::vector<Vec>& probes, double tol = 1e-9);

// Averaging twice equals averaging once, on random parameter draws.
PropertyReport check_idempotent(const PredictorFamily& family, const GroupKernel& kernel,
                                const OrbitResolver& resolver, const std::vector<Vec>& probes,
                                int n_predictors, std::uint64_t seed, double tol = 1e-9);

// Fixed-point law on random draws: averaged f agrees with f exactly when f
// is already equivariant on the probe set.
PropertyReport check_fixed_point(const PredictorFamily& family, const GroupKernel& kernel,
                                 const OrbitResolver& resolver, const std::vector<Vec>& probes,
                                 int n_predictors, std::uint64_t seed, double tol = 1e-9);

}  // namespace equicert
