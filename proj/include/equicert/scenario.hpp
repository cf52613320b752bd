#pragma once

#include "equicert/group.hpp"
#include "equicert/kernel.hpp"
#include "equicert/loss.hpp"
#include "equicert/predictor.hpp"

#include <string>
#include <tuple>
#include <vector>

namespace equicert {

enum class NoiseKind { none, label_flip, two_atom, gaussian };

// Output noise applied at the representative level, before the group part
// touches the input (outputs carry the trivial action, so ordering only
// matters for the bookkeeping).  The first three kinds have finite support,
// which is what keeps scenario risks exactly enumerable.
struct NoiseModel {
    NoiseKind kind = NoiseKind::none;
    double param = 0.0;  // flip probability / atom magnitude / stddev

    static NoiseModel parse(const std::string& text);
    std::string describe() const;

    bool enumerable() const { return kind != NoiseKind::gaussian; }
    // (value, probability) pairs of the noisy output for a clean target.
    std::vector<std::pair<double, double>> atoms(double target) const;
    double sample(double target, Rng& rng) const;
};

struct Dataset {
    int dim = 0;
    std::vector<Vec> xs;
    std::vector<double> ys;
    // Provenance carried in memory; files hold only the data.
    std::string spec_name;
    std::uint64_t seed = 0;

    std::size_t size() const { return xs.size(); }
};

void save_dataset_csv(const Dataset& data, const std::string& path);
Dataset load_dataset_csv(const std::string& path);

// One enumerated probability atom of the joint law.
struct JointAtom {
    Vec x;
    double y = 0.0;
    double prob = 0.0;
};

// Generative law: representative ~ finite table, group part ~ kernel given
// the representative, output = noisy target extended equivariantly (trivial
// output action: the group part leaves the label alone).
class GenerativeSpec {
public:
    GenerativeSpec(std::string name, GroupAction action, OrbitResolver resolver,
                   GroupKernel kernel, std::vector<Vec> representatives,
                   std::vector<double> rep_probs, std::vector<double> rep_targets,
                   NoiseModel noise, LossKind surrogate_loss, LossKind certificate_loss);

    const std::string& name() const { return name_; }
    const GroupAction& action() const { return action_; }
    const OrbitResolver& resolver() const { return resolver_; }
    const GroupKernel& kernel() const { return kernel_; }
    const std::vector<Vec>& representatives() const { return reps_; }
    const std::vector<double>& representative_probs() const { return rep_probs_; }
    const std::vector<double>& representative_targets() const { return targets_; }
    const NoiseModel& noise() const { return noise_; }
    LossKind surrogate_loss() const { return surrogate_loss_; }
    LossKind certificate_loss() const { return certificate_loss_; }

    // Same law under a different kernel (or noise); revalidates.
    GenerativeSpec with_kernel(GroupKernel kernel) const;
    GenerativeSpec with_noise(NoiseModel noise) const;

    bool enumerable() const { return noise_.enumerable(); }

    // Inputs reachable by any table element acting on any representative;
    // this is the tabular family's domain and a superset of the sampled
    // support (which only uses the kernel).
    std::vector<Vec> enumerate_inputs() const;
    // Representative index per enumerated input, aligned with the above.
    std::vector<int> orbit_class_of_inputs() const;

    std::vector<JointAtom> enumerate_joint() const;                // law of (X, Y)
    std::vector<JointAtom> enumerate_representative_joint() const; // law of (X_phi, Y_phi)

    std::pair<Vec, double> sample_pair(Rng& rng) const;
    std::pair<Vec, double> sample_representative_pair(Rng& rng) const;
    Dataset sample_dataset(long n, std::uint64_t seed) const;
    Dataset sample_representative_dataset(long n, std::uint64_t seed) const;

    // Baseline hypothesis family (linear for the planar toy, tabular
    // otherwise), the forced-tabular variant, and the weight-tied
    // equivariant subfamily of either.
    PredictorFamily default_family() const;
    PredictorFamily tabular_family() const;
    PredictorFamily equivariant_family(const PredictorFamily& base) const;

private:
    void validate() const;

    std::string name_;
    GroupAction action_;
    OrbitResolver resolver_;
    GroupKernel kernel_;
    std::vector<Vec> reps_;
    std::vector<double> rep_probs_;
    std::vector<double> targets_;
    NoiseModel noise_;
    LossKind surrogate_loss_;
    LossKind certificate_loss_;
};

// Builtins: "swap-toy" (order-2 swap on R^2, non-uniform kernel),
// "restricted-rotation" (C_k planar rotations on R^4, kernel confined to
// {r_-2..r_+2}), "shifted-signals" (integer shifts on 16-wide windows,
// kernel on {-2..+2}).  group_order tunes the cyclic order of
// restricted-rotation (0 = default 8); the other scenarios reject it.
GenerativeSpec builtin_scenario(const std::string& name, int group_order = 0);

// Total-variation-style witness of non-invariance: sum over enumerated
// input atoms of |P(x) - P(g.x)|, exact from the discrete law.  P(g.x) = 0
// when g.x leaves the enumerated support (or the window).
double invariance_defect(const GenerativeSpec& spec, const GroupElement& g);
double max_invariance_defect(const GenerativeSpec& spec);

}  // namespace equicert
