#include "equicert/kernel.hpp"

#include "equicert/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace equicert {

std::uint64_t representative_bucket(const Vec& rep) {
    // FNV-1a over the quantized coordinates.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xFF;
            h *= 1099511628211ULL;
        }
    };
    for (int i = 0; i < rep.size(); ++i) {
        const double q = std::round(rep[i] * 1e9);
        const auto ll = static_cast<long long>(q);
        std::uint64_t bits;
        std::memcpy(&bits, &ll, sizeof(bits));
        mix(bits);
    }
    return h;
}

void GroupKernel::check_tables() {
    auto check_one = [this](const std::vector<double>& w, const char* which) {
        if (w.size() != support_.size())
            throw ConfigError(std::string("kernel: table width mismatch (") + which + ")");
        double total = 0.0;
        for (double v : w) {
            if (!(v >= 0.0)) throw ConfigError("kernel: negative weight");
            total += v;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw ConfigError(std::string("kernel: weights sum to ") + fmt_double(total) +
                              ", expected 1 (" + which + ")");
    };
    check_one(pooled_, "pooled");
    for (const auto& [bucket, w] : by_bucket_) check_one(w, "bucket");
    for (const auto& g : support_) table_->name(g);  // membership
    for (std::size_t i = 0; i < support_.size(); ++i)
        for (std::size_t j = i + 1; j < support_.size(); ++j)
            if (support_[i] == support_[j]) throw ConfigError("kernel: duplicate support element");
}

GroupKernel GroupKernel::uniform(GroupPtr table) {
    GroupKernel k;
    k.table_ = std::move(table);
    k.support_ = k.table_->elements();
    k.pooled_.assign(k.support_.size(), 1.0 / static_cast<double>(k.support_.size()));
    k.check_tables();
    return k;
}

GroupKernel GroupKernel::global_table(GroupPtr table,
                                      std::vector<std::pair<GroupElement, double>> weights) {
    GroupKernel k;
    k.table_ = std::move(table);
    for (auto& [g, w] : weights) {
        k.support_.push_back(g);
        k.pooled_.push_back(w);
    }
    k.check_tables();
    return k;
}

GroupKernel GroupKernel::per_representative(GroupPtr table, std::vector<GroupElement> support,
                                            const std::vector<Vec>& reps,
                                            std::vector<std::vector<double>> tables) {
    if (reps.size() != tables.size())
        throw ConfigError("kernel: representative/table count mismatch");
    GroupKernel k;
    k.table_ = std::move(table);
    k.bucketing_ = KernelBucketing::per_representative;
    k.support_ = std::move(support);
    // Pooled fallback = average of the per-representative tables.
    k.pooled_.assign(k.support_.size(), 0.0);
    for (std::size_t r = 0; r < reps.size(); ++r) {
        const auto& w = tables[r];
        if (w.size() != k.support_.size()) throw ConfigError("kernel: ragged table");
        for (std::size_t i = 0; i < w.size(); ++i) k.pooled_[i] += w[i] / reps.size();
        k.by_bucket_[representative_bucket(reps[r])] = w;
    }
    k.check_tables();
    return k;
}

const std::vector<double>& GroupKernel::weights_for(const Vec& rep) const {
    if (bucketing_ == KernelBucketing::per_representative) {
        const auto it = by_bucket_.find(representative_bucket(rep));
        if (it != by_bucket_.end()) return it->second;
        // Unseen representative: fall back to the pooled table rather than
        // failing; kernels answer a probability query for any orbit.
    }
    return pooled_;
}

double GroupKernel::probability(const Vec& rep, const GroupElement& g) const {
    table_->name(g);  // membership check
    const auto& w = weights_for(rep);
    for (std::size_t i = 0; i < support_.size(); ++i)
        if (support_[i] == g) return w[i];
    return 0.0;
}

GroupElement GroupKernel::sample(const Vec& rep, Rng& rng) const {
    const auto& w = weights_for(rep);
    return support_[static_cast<std::size_t>(rng.discrete(w))];
}

bool GroupKernel::is_uniform_over_group() const {
    if (bucketing_ != KernelBucketing::global) return false;
    if (static_cast<int>(support_.size()) != table_->order()) return false;
    const double u = 1.0 / table_->order();
    for (double w : pooled_)
        if (std::abs(w - u) > 1e-12) return false;
    return true;
}

GroupKernel GroupKernel::mixed_with_uniform(double t) const {
    if (t < 0.0 || t > 1.0) throw ConfigError("kernel mix weight must lie in [0,1]");
    GroupKernel k;
    k.table_ = table_;
    k.bucketing_ = bucketing_;
    k.support_ = table_->elements();
    const double u = 1.0 / table_->order();
    auto mix_table = [&](const std::vector<double>& w) {
        std::vector<double> out(k.support_.size(), t * u);
        for (std::size_t i = 0; i < support_.size(); ++i)
            out[static_cast<std::size_t>(support_[i].index)] += (1.0 - t) * w[i];
        return out;
    };
    k.pooled_ = mix_table(pooled_);
    for (const auto& [bucket, w] : by_bucket_) k.by_bucket_[bucket] = mix_table(w);
    k.check_tables();
    return k;
}

GroupKernel GroupKernel::estimate(const std::vector<Vec>& inputs, const OrbitResolver& resolver,
                                  KernelBucketing mode) {
    if (inputs.empty()) throw ConfigError("kernel estimate: no inputs");
    const auto table = resolver.action().group_ptr();
    const int n = table->order();
    std::vector<double> pooled_counts(n, 0.0);
    std::map<std::uint64_t, std::vector<double>> bucket_counts;
    for (const auto& x : inputs) {
        const auto dec = resolver.resolve(x);
        pooled_counts[static_cast<std::size_t>(dec.group_part.index)] += 1.0;
        if (mode == KernelBucketing::per_representative) {
            auto& c = bucket_counts[representative_bucket(dec.representative)];
            if (c.empty()) c.assign(n, 0.0);
            c[static_cast<std::size_t>(dec.group_part.index)] += 1.0;
        }
    }

    GroupKernel k;
    k.table_ = table;
    k.bucketing_ = mode;
    // Support = elements observed anywhere (pooled), fixed across buckets.
    std::vector<int> keep;
    for (int i = 0; i < n; ++i)
        if (pooled_counts[i] > 0.0) keep.push_back(i);
    for (int i : keep) k.support_.push_back(table->element(i));
    auto project = [&keep](const std::vector<double>& counts) {
        double total = 0.0;
        for (int i : keep) total += counts[i];
        std::vector<double> w;
        w.reserve(keep.size());
        for (int i : keep) w.push_back(counts[i] / total);
        return w;
    };
    k.pooled_ = project(pooled_counts);
    if (mode == KernelBucketing::per_representative)
        for (const auto& [bucket, counts] : bucket_counts) k.by_bucket_[bucket] = project(counts);
    k.check_tables();
    return k;
}

void GroupKernel::validate_support_for(const GroupAction& action,
                                       const std::vector<Vec>& reps) const {
    if (action.group().id() != table_->id())
        throw GroupMismatchError("kernel and action use different group tables");
    for (const auto& rep : reps)
        for (const auto& g : support_)
            if (!action.can_act(g, rep))
                throw GroupRangeError("kernel support element " + table_->name(g) +
                                      " cannot act on a representative");
}

void GroupKernel::save_csv(const std::string& path) const {
    CsvTable t({"bucket_id", "element", "weight"});
    for (std::size_t i = 0; i < support_.size(); ++i)
        t.add_row({"*", table_->name(support_[i]), fmt_double(pooled_[i])});
    for (const auto& [bucket, w] : by_bucket_)
        for (std::size_t i = 0; i < support_.size(); ++i)
            t.add_row({std::to_string(bucket), table_->name(support_[i]), fmt_double(w[i])});
    t.write(path);
}

GroupKernel GroupKernel::load_csv(const std::string& path, GroupPtr table) {
    const auto t = CsvTable::read(path);
    if (t.header() != std::vector<std::string>{"bucket_id", "element", "weight"})
        throw IoError("kernel csv: unexpected header in " + path);
    GroupKernel k;
    k.table_ = std::move(table);
    std::map<std::uint64_t, std::map<int, double>> buckets;
    std::map<int, double> pooled;
    std::vector<int> order_seen;  // support order = first appearance in the pooled block
    for (const auto& row : t.rows()) {
        const auto g = k.table_->by_name(row[1]);
        const double w = parse_double(row[2]);
        if (row[0] == "*") {
            if (!pooled.count(g.index)) order_seen.push_back(g.index);
            pooled[g.index] = w;
        } else {
            buckets[static_cast<std::uint64_t>(std::stoull(row[0]))][g.index] = w;
        }
    }
    if (pooled.empty()) throw IoError("kernel csv: missing pooled block");
    for (int idx : order_seen) {
        k.support_.push_back(k.table_->element(idx));
        k.pooled_.push_back(pooled[idx]);
    }
    for (const auto& [bucket, by_elem] : buckets) {
        std::vector<double> w(k.support_.size(), 0.0);
        for (std::size_t i = 0; i < k.support_.size(); ++i) {
            const auto it = by_elem.find(k.support_[i].index);
            if (it == by_elem.end()) throw IoError("kernel csv: bucket missing a support element");
            w[i] = it->second;
        }
        k.by_bucket_[bucket] = w;
    }
    if (!k.by_bucket_.empty()) k.bucketing_ = KernelBucketing::per_representative;
    k.check_tables();
    return k;
}

}  // namespace equicert
