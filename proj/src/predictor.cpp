#include "equicert/predictor.hpp"

#include "equicert/csv.hpp"

#include <algorithm>
#include <cmath>

namespace equicert {

PredictorFamily PredictorFamily::linear(int input_dim) {
    if (input_dim < 1) throw ConfigError("linear family: dimension must be >= 1");
    PredictorFamily f;
    f.base_ = FamilyBase::linear;
    f.input_dim_ = input_dim;
    f.base_dim_ = input_dim;
    f.param_dim_ = input_dim;
    return f;
}

PredictorFamily PredictorFamily::tabular(std::vector<Vec> inputs) {
    if (inputs.empty()) throw ConfigError("tabular family: empty input set");
    PredictorFamily f;
    f.base_ = FamilyBase::tabular;
    f.input_dim_ = static_cast<int>(inputs[0].size());
    f.base_dim_ = static_cast<int>(inputs.size());
    f.param_dim_ = f.base_dim_;
    f.inputs_ = std::move(inputs);
    for (int i = 0; i < f.base_dim_; ++i) {
        if (f.inputs_[static_cast<std::size_t>(i)].size() != f.input_dim_)
            throw DimensionError("tabular family: mixed input dimensions");
        const auto key = representative_bucket(f.inputs_[static_cast<std::size_t>(i)]);
        if (f.index_.count(key))
            throw ConfigError("tabular family: two enumerated inputs share a bucket");
        f.index_[key] = i;
    }
    return f;
}

PredictorFamily PredictorFamily::tied(std::vector<int> tie_class) const {
    if (is_tied()) throw ConfigError("family is already tied");
    if (static_cast<int>(tie_class.size()) != base_dim_)
        throw DimensionError("tie pattern length != base dimension");
    int n_classes = 0;
    for (int c : tie_class) {
        if (c < 0) throw ConfigError("tie class must be nonnegative");
        n_classes = std::max(n_classes, c + 1);
    }
    // Every class must be inhabited, otherwise parameters are dead weight.
    std::vector<char> seen(static_cast<std::size_t>(n_classes), 0);
    for (int c : tie_class) seen[static_cast<std::size_t>(c)] = 1;
    for (char s : seen)
        if (!s) throw ConfigError("tie pattern leaves an empty class");
    PredictorFamily f = *this;
    f.tie_ = std::move(tie_class);
    f.param_dim_ = n_classes;
    return f;
}

const std::vector<Vec>& PredictorFamily::inputs() const {
    if (base_ != FamilyBase::tabular) throw ConfigError("inputs(): not a tabular family");
    return inputs_;
}

int PredictorFamily::lookup(const Vec& x) const {
    const auto it = index_.find(representative_bucket(x));
    if (it != index_.end()) return it->second;
    // Composed actions can perturb coordinates across the quantization
    // boundary; re-scan before giving up.
    for (int i = 0; i < base_dim_; ++i)
        if ((inputs_[static_cast<std::size_t>(i)] - x).lpNorm<Eigen::Infinity>() <= 1e-8) return i;
    throw UnknownInputError("tabular family: input not in the enumerated set");
}

Feature PredictorFamily::feature(const Vec& x) const {
    if (x.size() != input_dim_) throw DimensionError("feature: wrong input dimension");
    if (base_ == FamilyBase::tabular) {
        const int i = lookup(x);
        return {{is_tied() ? tie_[static_cast<std::size_t>(i)] : i, 1.0}};
    }
    if (!is_tied()) {
        Feature out;
        out.reserve(static_cast<std::size_t>(input_dim_));
        for (int i = 0; i < input_dim_; ++i) out.emplace_back(i, x[i]);
        return out;
    }
    // Tied linear: coefficients of coordinates sharing a class accumulate.
    std::vector<double> acc(static_cast<std::size_t>(param_dim_), 0.0);
    for (int i = 0; i < input_dim_; ++i) acc[static_cast<std::size_t>(tie_[static_cast<std::size_t>(i)])] += x[i];
    Feature out;
    for (int c = 0; c < param_dim_; ++c)
        if (acc[static_cast<std::size_t>(c)] != 0.0) out.emplace_back(c, acc[static_cast<std::size_t>(c)]);
    return out;
}

double PredictorFamily::eval(const Vec& params, const Vec& x) const {
    if (params.size() != param_dim_) throw DimensionError("eval: wrong parameter dimension");
    double y = 0.0;
    for (const auto& [i, c] : feature(x)) y += params[i] * c;
    return y;
}

PredictorFn PredictorFamily::predictor(Vec params) const {
    if (params.size() != param_dim_) throw DimensionError("predictor: wrong parameter dimension");
    PredictorFamily fam = *this;
    return [fam, p = std::move(params)](const Vec& x) { return fam.eval(p, x); };
}

Mat PredictorFamily::tying_matrix() const {
    Mat t = Mat::Zero(base_dim_, param_dim_);
    for (int i = 0; i < base_dim_; ++i) t(i, is_tied() ? tie_[static_cast<std::size_t>(i)] : i) = 1.0;
    return t;
}

std::string PredictorFamily::describe() const {
    std::string s = base_ == FamilyBase::linear ? "linear" : "tabular";
    if (is_tied()) s = "tied-" + s;
    return s + "(p=" + std::to_string(param_dim_) + ")";
}

PredictorFn average_function(PredictorFn f, const GroupKernel& kernel,
                             const OrbitResolver& resolver) {
    return [f = std::move(f), kernel, resolver](const Vec& x) {
        const auto dec = resolver.resolve(x);
        const auto& action = resolver.action();
        double acc = 0.0;
        for (const auto& g : kernel.support()) {
            const double w = kernel.probability(dec.representative, g);
            if (w == 0.0) continue;
            if (!action.can_act(g, dec.representative))
                throw GroupRangeError("averaging: kernel support element " +
                                      action.group().name(g) +
                                      " cannot act on the resolved representative");
            acc += w * f(action.act_input(g, dec.representative));
        }
        return acc;
    };
}

std::vector<Vec> audit_probes(const PredictorFamily& family, const GroupAction& action,
                              const GroupKernel& kernel, int count, std::uint64_t seed) {
    if (family.base() == FamilyBase::tabular) return family.inputs();

    Rng rng(seed);
    std::vector<Vec> probes;
    probes.reserve(static_cast<std::size_t>(count));
    if (action.input_kind() != InputRepKind::index_shift) {
        for (int i = 0; i < count; ++i) {
            Vec x(action.dim());
            for (int j = 0; j < x.size(); ++j) x[j] = rng.gaussian();
            probes.push_back(std::move(x));
        }
        return probes;
    }
    // Shift probes: draw a canonical pattern and displace it by a kernel
    // support element, so that every support shift still acts on the
    // resolved representative.
    int margin = 0;
    for (const auto& g : kernel.support())
        margin = std::max(margin, std::abs(action.group().shift_offset(g)));
    const int w = action.dim();
    const int base = margin;  // align pattern starts at the margin
    const int max_len = w - base - margin;
    if (max_len < 1) throw ConfigError("audit_probes: window too small for the kernel support");
    for (int i = 0; i < count; ++i) {
        const int len = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(max_len));
        Vec x = Vec::Zero(w);
        for (int j = 0; j < len; ++j) {
            double v = rng.gaussian();
            if (std::abs(v) < 1e-3) v = 1e-3;  // keep the support exact
            x[base + j] = v;
        }
        const auto g = kernel.support()[static_cast<std::size_t>(
            rng.next_u64() % kernel.support().size())];
        if (action.can_act(g, x)) x = action.act_input(g, x);
        probes.push_back(std::move(x));
    }
    return probes;
}

namespace {

// The probe's reachable orbit, walked from its representative: pairs
// (g, g.x_phi) for every table element that can act.  Every point here is
// decomposable by construction, which matters for partial (windowed shift)
// actions where acting on a raw probe can leave the domain.
std::vector<std::pair<GroupElement, Vec>> representative_orbit(const OrbitResolver& resolver,
                                                               const Vec& x) {
    const auto& action = resolver.action();
    const Vec rep = resolver.resolve(x).representative;
    std::vector<std::pair<GroupElement, Vec>> out;
    for (const auto& g : action.group().elements()) {
        if (!action.can_act(g, rep)) continue;
        out.emplace_back(g, action.act_input(g, rep));
    }
    return out;
}

}  // namespace

PropertyReport check_equivariant(const PredictorFn& f, const OrbitResolver& resolver,
                                 const std::vector<Vec>& probes, double tol) {
    PropertyReport rep;
    const auto& action = resolver.action();
    for (const auto& x : probes) {
        const double fphi = f(resolver.resolve(x).representative);
        for (const auto& [g, gx] : representative_orbit(resolver, x)) {
            // Trivial output action: g^{-1}.f(g.x_phi) = f(g.x_phi).
            const double dev = std::abs(f(gx) - action.act_output(g, fphi));
            ++rep.cases;
            rep.max_deviation = std::max(rep.max_deviation, dev);
            if (dev > tol && rep.pass) {
                rep.pass = false;
                rep.detail = "f(" + action.group().name(g) + ".x) deviates by " + fmt_double(dev);
            }
        }
    }
    return rep;
}

PropertyReport check_idempotent(const PredictorFamily& family, const GroupKernel& kernel,
                                const OrbitResolver& resolver, const std::vector<Vec>& probes,
                                int n_predictors, std::uint64_t seed, double tol) {
    PropertyReport rep;
    Rng rng(seed);
    for (int k = 0; k < n_predictors; ++k) {
        Vec w(family.param_dim());
        for (int i = 0; i < w.size(); ++i) w[i] = rng.gaussian();
        const auto once = average_function(family.predictor(w), kernel, resolver);
        const auto twice = average_function(once, kernel, resolver);
        for (const auto& x : probes) {
            const double dev = std::abs(once(x) - twice(x));
            ++rep.cases;
            rep.max_deviation = std::max(rep.max_deviation, dev);
            if (dev > tol && rep.pass) {
                rep.pass = false;
                rep.detail = "double averaging drifts by " + fmt_double(dev);
            }
        }
    }
    return rep;
}

PropertyReport check_fixed_point(const PredictorFamily& family, const GroupKernel& kernel,
                                 const OrbitResolver& resolver, const std::vector<Vec>& probes,
                                 int n_predictors, std::uint64_t seed, double tol) {
    PropertyReport rep;
    Rng rng(seed);
    const auto& action = resolver.action();

    auto deviations = [&](const PredictorFn& f) {
        const auto averaged = average_function(f, kernel, resolver);
        double dev_equi = 0.0, dev_fixed = 0.0;
        for (const auto& x : probes) {
            const double fphi = f(resolver.resolve(x).representative);
            dev_fixed = std::max(dev_fixed, std::abs(f(x) - averaged(x)));
            for (const auto& [g, gx] : representative_orbit(resolver, x)) {
                dev_equi = std::max(dev_equi, std::abs(f(gx) - action.act_output(g, fphi)));
                dev_fixed = std::max(dev_fixed, std::abs(f(gx) - averaged(gx)));
            }
            ++rep.cases;
        }
        return std::make_pair(dev_equi, dev_fixed);
    };

    for (int k = 0; k < n_predictors; ++k) {
        Vec w(family.param_dim());
        for (int i = 0; i < w.size(); ++i) w[i] = rng.gaussian();
        const auto f = family.predictor(w);

        const auto [dev_equi, dev_fixed] = deviations(f);
        if (dev_equi <= tol) {
            // Equivariant draw (tied families land here): must be fixed.
            rep.max_deviation = std::max(rep.max_deviation, dev_fixed);
            if (dev_fixed > tol && rep.pass) {
                rep.pass = false;
                rep.detail =
                    "equivariant draw is not a fixed point (drift " + fmt_double(dev_fixed) + ")";
            }
        } else if (dev_equi > 100 * tol && dev_fixed <= tol && rep.pass) {
            // Guard band above tol so borderline numeric deviations are not
            // misread as genuine non-equivariance.
            rep.pass = false;
            rep.detail = "non-equivariant draw is a fixed point";
        }

        // The averaged version must itself be a fixed point (and hence
        // equivariant); this exercises the "if" direction on nontrivial
        // examples.
        const auto averaged = average_function(f, kernel, resolver);
        const auto [a_equi, a_fixed] = deviations(averaged);
        rep.max_deviation = std::max({rep.max_deviation, a_equi, a_fixed});
        if ((a_equi > tol || a_fixed > tol) && rep.pass) {
            rep.pass = false;
            rep.detail = "averaged draw fails the fixed-point law (equi " + fmt_double(a_equi) +
                         ", fixed " + fmt_double(a_fixed) + ")";
        }
    }
    return rep;
}

ParameterProjection build_parameter_projection(const PredictorFamily& family,
                                               const GroupAction& action,
                                               const GroupKernel& kernel,
                                               const OrbitResolver& resolver) {
    if (action.group().id() != kernel.group().id())
        throw GroupMismatchError("projection: kernel and action use different group tables");

    ParameterProjection proj;
    const int p = family.param_dim();

    if (family.is_tied()) {
        // Tied pattern: certified only when every shared-parameter basis
        // function is already equivariant, in which case averaging fixes the
        // whole family and the free parameters are untouched.
        const auto probes = audit_probes(family, action, kernel, 64, 0xA11D17);
        for (int c = 0; c < p; ++c) {
            const auto basis = family.predictor(Vec::Unit(p, c));
            const auto r = check_equivariant(basis, resolver, probes, 1e-9);
            if (!r.pass)
                throw ClosureNotCertifiedError(
                    "tied family basis " + std::to_string(c) +
                    " is not equivariant: " + r.detail);
        }
        proj.matrix = Mat::Identity(p, p);
        proj.provenance = "tied-equivariant-identity";
    } else if (family.base() == FamilyBase::tabular) {
        // Columns are the averaged one-hot tables evaluated over the
        // enumerated inputs; closed because averaging a table is a table.
        const auto& inputs = family.inputs();
        Mat a(p, p);
        for (int j = 0; j < p; ++j) {
            const auto avg = average_function(family.predictor(Vec::Unit(p, j)), kernel, resolver);
            for (int i = 0; i < p; ++i) a(i, j) = avg(inputs[static_cast<std::size_t>(i)]);
        }
        proj.matrix = std::move(a);
        proj.provenance = "tabular-orbit-sum";
    } else if (family.base() == FamilyBase::linear && kernel.is_uniform_over_group() &&
               action.input_kind() != InputRepKind::index_shift) {
        // Uniform kernel + orthogonal representation: averaging a linear
        // functional stays linear, with the group-averaged transposed
        // representation acting on the weights.  Non-uniform kernels leave
        // this class (the average is only piecewise linear across sectors),
        // so they are deliberately not certified here.
        Mat a = Mat::Zero(p, p);
        for (const auto& g : action.group().elements())
            a += action.input_matrix(g).transpose();
        a /= static_cast<double>(action.group().order());
        proj.matrix = std::move(a);
        proj.provenance = "uniform-linear-rep-average";
    } else {
        throw ClosureNotCertifiedError(
            "no closure rule for " + family.describe() +
            (kernel.is_uniform_over_group() ? " with this action" : " under a non-uniform kernel"));
    }

    // Audit the produced matrix regardless of which rule fired.
    if ((proj.matrix * proj.matrix - proj.matrix).lpNorm<Eigen::Infinity>() > 1e-10)
        throw ClosureNotCertifiedError("projection audit: matrix is not idempotent");
    const auto probes = audit_probes(family, action, kernel, 32, 0xA11D18);
    Rng rng(0xA11D19);
    for (int k = 0; k < 100; ++k) {
        Vec w(p);
        for (int i = 0; i < p; ++i) w[i] = rng.gaussian();
        const auto avg = average_function(family.predictor(w), kernel, resolver);
        const Vec aw = proj.matrix * w;
        const auto& x = probes[static_cast<std::size_t>(rng.next_u64() % probes.size())];
        const double dev = std::abs(family.eval(aw, x) - avg(x));
        if (dev > 1e-9)
            throw ClosureNotCertifiedError("projection audit: parameter-space image deviates by " +
                                           fmt_double(dev));
    }
    return proj;
}

}  // namespace equicert
