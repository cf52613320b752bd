#pragma once

#include "equicert/group.hpp"
#include "equicert/rng.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace equicert {

// Quantized fingerprint of an orbit representative, used to key
// representative-dependent kernel tables.  Coordinates are snapped to a
// 1e-9 lattice before hashing so that float noise from group actions does
// not split buckets.
std::uint64_t representative_bucket(const Vec& rep);

enum class KernelBucketing { global, per_representative };

// Conditional distribution over group elements given an orbit
// representative: the disintegration of the input law along orbits.  Weights
// live on an explicit finite support; everything off-support has
// probability zero.
class GroupKernel {
public:
    // Uniform over the whole (finite) group.
    static GroupKernel uniform(GroupPtr table);

    // One shared table for every representative.
    static GroupKernel global_table(GroupPtr table,
                                    std::vector<std::pair<GroupElement, double>> weights);

    // Per-representative tables over a common support; `reps` and `tables`
    // are aligned.  A pooled table handles unseen representatives.
    static GroupKernel per_representative(GroupPtr table, std::vector<GroupElement> support,
                                          const std::vector<Vec>& reps,
                                          std::vector<std::vector<double>> tables);

    const GroupPtr& group_ptr() const { return table_; }
    const GroupTable& group() const { return *table_; }
    KernelBucketing bucketing() const { return bucketing_; }
    const std::vector<GroupElement>& support() const { return support_; }

    // kappa(rep, {g}); zero off support, never throws for in-group g.
    double probability(const Vec& rep, const GroupElement& g) const;
    GroupElement sample(const Vec& rep, Rng& rng) const;

    bool is_uniform_over_group() const;

    // Convex mix toward the uniform kernel: (1-t)*this + t*uniform.
    GroupKernel mixed_with_uniform(double t) const;

    // Empirical kernel from data: resolve each input, count group parts.
    static GroupKernel estimate(const std::vector<Vec>& inputs, const OrbitResolver& resolver,
                                KernelBucketing mode);

    // Every support element must act on every representative (shifts can
    // leave the window); throws GroupRangeError naming the offender.
    void validate_support_for(const GroupAction& action, const std::vector<Vec>& reps) const;

    // Rows: bucket_id,element,weight.  bucket_id is "*" for pooled/global.
    void save_csv(const std::string& path) const;
    static GroupKernel load_csv(const std::string& path, GroupPtr table);

private:
    GroupKernel() = default;
    void check_tables();
    const std::vector<double>& weights_for(const Vec& rep) const;

    GroupPtr table_;
    KernelBucketing bucketing_ = KernelBucketing::global;
    std::vector<GroupElement> support_;
    std::vector<double> pooled_;                       // global table / fallback
    std::map<std::uint64_t, std::vector<double>> by_bucket_;  // per-representative mode
};

}  // namespace equicert
