#include "equicert/scenario.hpp"

#include "equicert/csv.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace equicert {

NoiseModel NoiseModel::parse(const std::string& text) {
    if (text == "none") return {NoiseKind::none, 0.0};
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    if (colon == std::string::npos)
        throw ConfigError("noise '" + text + "': expected kind:param");
    const double param = parse_double(text.substr(colon + 1));
    if (head == "flip") {
        if (param < 0.0 || param > 1.0) throw ConfigError("flip probability outside [0,1]");
        return {NoiseKind::label_flip, param};
    }
    if (head == "two-atom") {
        if (param < 0.0) throw ConfigError("two-atom magnitude must be >= 0");
        return {NoiseKind::two_atom, param};
    }
    if (head == "gauss") {
        if (param < 0.0) throw ConfigError("gaussian noise stddev must be >= 0");
        return {NoiseKind::gaussian, param};
    }
    throw ConfigError("unknown noise kind '" + head + "'");
}

std::string NoiseModel::describe() const {
    switch (kind) {
        case NoiseKind::none: return "none";
        case NoiseKind::label_flip: return "flip:" + fmt_double(param);
        case NoiseKind::two_atom: return "two-atom:" + fmt_double(param);
        case NoiseKind::gaussian: return "gauss:" + fmt_double(param);
    }
    return "?";
}

std::vector<std::pair<double, double>> NoiseModel::atoms(double target) const {
    switch (kind) {
        case NoiseKind::none:
            return {{target, 1.0}};
        case NoiseKind::label_flip:
            if (param == 0.0) return {{target, 1.0}};
            return {{target, 1.0 - param}, {-target, param}};
        case NoiseKind::two_atom:
            if (param == 0.0) return {{target, 1.0}};
            return {{target - param, 0.5}, {target + param, 0.5}};
        case NoiseKind::gaussian:
            throw ConfigError("gaussian noise has no finite atom expansion");
    }
    return {};
}

double NoiseModel::sample(double target, Rng& rng) const {
    switch (kind) {
        case NoiseKind::none:
            return target;
        case NoiseKind::label_flip:
            return rng.uniform01() < param ? -target : target;
        case NoiseKind::two_atom:
            return rng.uniform01() < 0.5 ? target - param : target + param;
        case NoiseKind::gaussian:
            return target + param * rng.gaussian();
    }
    return target;
}

void save_dataset_csv(const Dataset& data, const std::string& path) {
    std::ostringstream out;
    out << "dim," << data.dim << '\n';
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (int i = 0; i < data.dim; ++i) out << fmt_double(data.xs[r][i]) << ',';
        out << fmt_double(data.ys[r]) << '\n';
    }
    write_text_atomic(path, out.str());
}

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    long line_no = 0;
    auto fail = [&](const std::string& what) {
        throw IoError(path + ":" + std::to_string(line_no) + ": " + what);
    };
    if (!std::getline(in, line)) {
        line_no = 1;
        fail("missing header");
    }
    ++line_no;
    Dataset data;
    {
        std::istringstream hs(line);
        std::string tag, dim_str;
        if (!std::getline(hs, tag, ',') || tag != "dim" || !std::getline(hs, dim_str))
            fail("header must be 'dim,<d>'");
        data.dim = static_cast<int>(parse_long(dim_str));
        if (data.dim < 1) fail("dimension must be >= 1");
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        std::vector<double> vals;
        while (std::getline(ls, field, ',')) {
            try {
                vals.push_back(parse_double(field));
            } catch (const IoError&) {
                fail("bad numeric field '" + field + "'");
            }
        }
        if (static_cast<int>(vals.size()) != data.dim + 1)
            fail("expected " + std::to_string(data.dim + 1) + " fields, got " +
                 std::to_string(vals.size()));
        Vec x(data.dim);
        for (int i = 0; i < data.dim; ++i) x[i] = vals[static_cast<std::size_t>(i)];
        data.xs.push_back(std::move(x));
        data.ys.push_back(vals.back());
    }
    return data;
}

GenerativeSpec::GenerativeSpec(std::string name, GroupAction action, OrbitResolver resolver,
                               GroupKernel kernel, std::vector<Vec> representatives,
                               std::vector<double> rep_probs, std::vector<double> rep_targets,
                               NoiseModel noise, LossKind surrogate_loss,
                               LossKind certificate_loss)
    : name_(std::move(name)),
      action_(std::move(action)),
      resolver_(std::move(resolver)),
      kernel_(std::move(kernel)),
      reps_(std::move(representatives)),
      rep_probs_(std::move(rep_probs)),
      targets_(std::move(rep_targets)),
      noise_(noise),
      surrogate_loss_(surrogate_loss),
      certificate_loss_(certificate_loss) {
    validate();
}

void GenerativeSpec::validate() const {
    if (reps_.empty()) throw ConfigError("scenario: no representatives");
    if (reps_.size() != rep_probs_.size() || reps_.size() != targets_.size())
        throw ConfigError("scenario: representative table sizes disagree");
    if (action_.group().id() != kernel_.group().id())
        throw GroupMismatchError("scenario: kernel and action use different group tables");
    double total = 0.0;
    for (double p : rep_probs_) {
        if (!(p > 0.0)) throw ConfigError("scenario: representative probabilities must be > 0");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ConfigError("scenario: representative probabilities sum to " + fmt_double(total));
    for (const auto& rep : reps_) {
        if (rep.size() != action_.dim())
            throw DimensionError("scenario: representative dimension mismatch");
        if (!resolver_.is_canonical(rep))
            throw ConfigError("scenario: representative is not canonical under the resolver");
    }
    kernel_.validate_support_for(action_, reps_);
    for (double t : targets_)
        if (!std::isfinite(t)) throw ConfigError("scenario: non-finite target");
}

GenerativeSpec GenerativeSpec::with_kernel(GroupKernel kernel) const {
    GenerativeSpec s = *this;
    s.kernel_ = std::move(kernel);
    s.validate();
    return s;
}

GenerativeSpec GenerativeSpec::with_noise(NoiseModel noise) const {
    GenerativeSpec s = *this;
    s.noise_ = noise;
    s.validate();
    return s;
}

std::vector<Vec> GenerativeSpec::enumerate_inputs() const {
    std::vector<Vec> out;
    for (const auto& rep : reps_)
        for (const auto& g : action_.group().elements())
            if (action_.can_act(g, rep)) out.push_back(action_.act_input(g, rep));
    return out;
}

std::vector<int> GenerativeSpec::orbit_class_of_inputs() const {
    std::vector<int> out;
    for (std::size_t r = 0; r < reps_.size(); ++r)
        for (const auto& g : action_.group().elements())
            if (action_.can_act(g, reps_[r])) out.push_back(static_cast<int>(r));
    return out;
}

std::vector<JointAtom> GenerativeSpec::enumerate_joint() const {
    if (!enumerable()) throw ConfigError("scenario: noise support is not finite");
    std::vector<JointAtom> atoms;
    for (std::size_t r = 0; r < reps_.size(); ++r) {
        for (const auto& g : kernel_.support()) {
            const double kg = kernel_.probability(reps_[r], g);
            if (kg == 0.0) continue;
            const Vec x = action_.act_input(g, reps_[r]);
            for (const auto& [y, q] : noise_.atoms(targets_[r]))
                atoms.push_back({x, action_.act_output(g, y), rep_probs_[r] * kg * q});
        }
    }
    return atoms;
}

std::vector<JointAtom> GenerativeSpec::enumerate_representative_joint() const {
    if (!enumerable()) throw ConfigError("scenario: noise support is not finite");
    std::vector<JointAtom> atoms;
    for (std::size_t r = 0; r < reps_.size(); ++r)
        for (const auto& [y, q] : noise_.atoms(targets_[r]))
            atoms.push_back({reps_[r], y, rep_probs_[r] * q});
    return atoms;
}

std::pair<Vec, double> GenerativeSpec::sample_pair(Rng& rng) const {
    // Fixed draw order (representative, group part, noise) pins the stream.
    const int r = rng.discrete(rep_probs_);
    const auto g = kernel_.sample(reps_[static_cast<std::size_t>(r)], rng);
    const double y = noise_.sample(targets_[static_cast<std::size_t>(r)], rng);
    return {action_.act_input(g, reps_[static_cast<std::size_t>(r)]),
            action_.act_output(g, y)};
}

std::pair<Vec, double> GenerativeSpec::sample_representative_pair(Rng& rng) const {
    const int r = rng.discrete(rep_probs_);
    const double y = noise_.sample(targets_[static_cast<std::size_t>(r)], rng);
    return {reps_[static_cast<std::size_t>(r)], y};
}

Dataset GenerativeSpec::sample_dataset(long n, std::uint64_t seed) const {
    Rng rng(seed);
    Dataset data;
    data.dim = action_.dim();
    data.spec_name = name_;
    data.seed = seed;
    data.xs.reserve(static_cast<std::size_t>(n));
    data.ys.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        auto [x, y] = sample_pair(rng);
        data.xs.push_back(std::move(x));
        data.ys.push_back(y);
    }
    return data;
}

Dataset GenerativeSpec::sample_representative_dataset(long n, std::uint64_t seed) const {
    Rng rng(seed);
    Dataset data;
    data.dim = action_.dim();
    data.spec_name = name_ + "-representatives";
    data.seed = seed;
    for (long i = 0; i < n; ++i) {
        auto [x, y] = sample_representative_pair(rng);
        data.xs.push_back(std::move(x));
        data.ys.push_back(y);
    }
    return data;
}

PredictorFamily GenerativeSpec::default_family() const {
    if (name_ == "swap-toy") return PredictorFamily::linear(action_.dim());
    return tabular_family();
}

PredictorFamily GenerativeSpec::tabular_family() const {
    return PredictorFamily::tabular(enumerate_inputs());
}

PredictorFamily GenerativeSpec::equivariant_family(const PredictorFamily& base) const {
    if (base.base() == FamilyBase::tabular) {
        // One shared weight per orbit: recompute the class of each
        // enumerated input through the resolver rather than trusting the
        // construction order.
        std::vector<int> classes;
        classes.reserve(base.inputs().size());
        for (const auto& x : base.inputs()) {
            const Vec rep = resolver_.resolve(x).representative;
            int cls = -1;
            for (std::size_t r = 0; r < reps_.size(); ++r)
                if ((reps_[r] - rep).lpNorm<Eigen::Infinity>() <= 1e-8) cls = static_cast<int>(r);
            if (cls < 0) throw ConfigError("equivariant family: input resolves off the table");
            classes.push_back(cls);
        }
        return base.tied(std::move(classes));
    }
    // Linear base: the only invariant linear functionals under the swap are
    // multiples of the coordinate sum, i.e. all coordinates share a weight.
    return base.tied(std::vector<int>(static_cast<std::size_t>(base.base_dim()), 0));
}

namespace {

GenerativeSpec make_swap_toy() {
    auto table = std::make_shared<const GroupTable>(GroupTable::symmetric2());
    auto action = GroupAction::coordinate_reversal(table, 2);
    OrbitResolver resolver(action, CanonicalRule::lex_max);
    // Non-uniform group part: identity favored, so the input law is not
    // swap-invariant (the planar analog of a mean shifted off the diagonal).
    auto kernel = GroupKernel::global_table(
        table, {{table->by_name("e"), 0.7}, {table->by_name("s"), 0.3}});
    std::vector<Vec> reps = {
        (Vec(2) << 1.0, 0.25).finished(),
        (Vec(2) << 0.8, -0.4).finished(),
        (Vec(2) << 0.3, 0.05).finished(),
        (Vec(2) << -0.2, -0.9).finished(),
    };
    return GenerativeSpec("swap-toy", action, resolver, kernel, std::move(reps),
                          {0.4, 0.3, 0.2, 0.1}, {0.3, 0.55, 0.7, 0.45},
                          {NoiseKind::two_atom, 0.05}, LossKind::squared_clipped,
                          LossKind::squared_clipped);
}

GenerativeSpec make_restricted_rotation(int order) {
    if (order == 0) order = 8;
    // The kernel keeps two rotation steps either side of the identity with
    // everything else excluded, so at least five elements are needed.
    if (order < 5)
        throw ConfigError("restricted-rotation: group order must be >= 5");
    auto table = std::make_shared<const GroupTable>(GroupTable::cyclic(order));
    auto action = GroupAction::planar_rotation(table, 4);
    OrbitResolver resolver(action, CanonicalRule::angle_sector);
    // Excluded rotations have probability zero, so the input law is
    // decidedly non-invariant under the full cyclic group.
    auto kernel = GroupKernel::global_table(table, {
                                                       {table->element(order - 2), 0.1},
                                                       {table->element(order - 1), 0.2},
                                                       {table->element(0), 0.4},
                                                       {table->element(1), 0.2},
                                                       {table->element(2), 0.1},
                                                   });
    // Leading blocks are pinned by (radius, sector fraction) so the same six
    // patterns stay canonical at every group order.
    const double rad[6] = {1.0, 0.85, 1.25, 0.9, 0.7, 1.3};
    const double frac[6] = {0.19, 0.79, 0.41, 0.07, 0.67, 0.54};
    const double tail[6][2] = {{0.3, -0.7}, {-0.5, 0.2},  {0.1, 0.9},
                               {-0.8, -0.3}, {0.55, 0.1}, {0.0, -0.45}};
    const double sector = 2.0 * std::numbers::pi / order;
    std::vector<Vec> reps;
    for (int i = 0; i < 6; ++i) {
        Vec x(4);
        x[0] = rad[i] * std::cos(frac[i] * sector);
        x[1] = rad[i] * std::sin(frac[i] * sector);
        x[2] = tail[i][0];
        x[3] = tail[i][1];
        reps.push_back(std::move(x));
    }
    return GenerativeSpec("restricted-rotation", action, resolver, kernel, std::move(reps),
                          {0.22, 0.2, 0.18, 0.16, 0.14, 0.1},
                          {0.4, -0.4, 0.4, -0.4, 0.4, -0.4},
                          {NoiseKind::label_flip, 0.1}, LossKind::logistic_normalized,
                          LossKind::zero_one);
}

GenerativeSpec make_shifted_signals() {
    auto table = std::make_shared<const GroupTable>(GroupTable::integer_shifts(2));
    auto action = GroupAction::index_shift(table, 16);
    // Patterns align two slots in from the left edge so every shift in the
    // group still fits inside the window.
    OrbitResolver resolver(action, CanonicalRule::support_left_align, 2);
    auto kernel = GroupKernel::global_table(table, {
                                                       {table->shift(-2), 0.1},
                                                       {table->shift(-1), 0.2},
                                                       {table->shift(0), 0.4},
                                                       {table->shift(1), 0.2},
                                                       {table->shift(2), 0.1},
                                                   });
    auto pattern = [](std::initializer_list<double> vals) {
        Vec x = Vec::Zero(16);
        int i = 2;
        for (double v : vals) x[i++] = v;
        return x;
    };
    std::vector<Vec> reps = {
        pattern({0.9, -0.6, 0.4, 0.8, -0.3, 0.5}),
        pattern({-0.7, 0.5, 0.9, -0.4, 0.6}),
        pattern({0.5, 0.3, -0.8, 0.6, 0.2, -0.5, 0.9, -0.2}),
    };
    return GenerativeSpec("shifted-signals", action, resolver, kernel, std::move(reps),
                          {0.5, 0.3, 0.2}, {0.4, -0.4, 0.4},
                          {NoiseKind::label_flip, 0.1}, LossKind::logistic_normalized,
                          LossKind::zero_one);
}

}  // namespace

GenerativeSpec builtin_scenario(const std::string& name, int group_order) {
    if (name == "restricted-rotation") return make_restricted_rotation(group_order);
    if (group_order != 0)
        throw ConfigError("scenario '" + name + "' has a fixed group; group order is not tunable");
    if (name == "swap-toy") return make_swap_toy();
    if (name == "shifted-signals") return make_shifted_signals();
    throw ConfigError("unknown scenario '" + name + "'");
}

double invariance_defect(const GenerativeSpec& spec, const GroupElement& g) {
    // Exact marginal law of X on the enumerated support.
    std::map<std::uint64_t, std::pair<Vec, double>> law;
    for (const auto& atom : spec.enumerate_joint()) {
        auto& slot = law[representative_bucket(atom.x)];
        slot.first = atom.x;
        slot.second += atom.prob;
    }
    auto prob_of = [&law](const Vec& x) {
        const auto it = law.find(representative_bucket(x));
        return it == law.end() ? 0.0 : it->second.second;
    };
    double defect = 0.0;
    for (const auto& [key, entry] : law) {
        const auto& [x, px] = entry;
        double p_gx = 0.0;
        if (spec.action().can_act(g, x)) p_gx = prob_of(spec.action().act_input(g, x));
        defect += std::abs(px - p_gx);
    }
    return defect;
}

double max_invariance_defect(const GenerativeSpec& spec) {
    double worst = 0.0;
    for (const auto& g : spec.action().group().elements()) {
        if (g == spec.action().group().identity()) continue;
        worst = std::max(worst, invariance_defect(spec, g));
    }
    return worst;
}

}  // namespace equicert
