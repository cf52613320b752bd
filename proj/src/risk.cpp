#include "equicert/risk.hpp"

#include "equicert/csv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace equicert {

namespace {

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }
double normal_pdf(double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
}

std::vector<JointAtom> atoms_for(const RiskTarget& target) {
    switch (target.kind) {
        case RiskTarget::Kind::empirical_full:
        case RiskTarget::Kind::empirical_representative: {
            const Dataset& d = *target.data;
            if (d.size() == 0) throw ConfigError("risk: empty dataset");
            if (target.kind == RiskTarget::Kind::empirical_representative) {
                for (std::size_t i = 0; i < d.size(); ++i)
                    if (!target.resolver->is_canonical(d.xs[i]))
                        throw ConfigError("risk: non-canonical representative row " +
                                          std::to_string(i));
            }
            std::vector<JointAtom> atoms;
            atoms.reserve(d.size());
            const double w = 1.0 / static_cast<double>(d.size());
            for (std::size_t i = 0; i < d.size(); ++i) atoms.push_back({d.xs[i], d.ys[i], w});
            return atoms;
        }
        case RiskTarget::Kind::true_enumerated:
            return target.spec->enumerate_joint();
        case RiskTarget::Kind::representative_enumerated:
            return target.spec->enumerate_representative_joint();
    }
    throw NumericError("risk: unreachable");
}

}  // namespace

RiskTarget RiskTarget::empirical(const Dataset& d) {
    return {Kind::empirical_full, &d, nullptr, nullptr};
}
RiskTarget RiskTarget::empirical_representatives(const Dataset& d, const OrbitResolver& r) {
    return {Kind::empirical_representative, &d, &r, nullptr};
}
RiskTarget RiskTarget::true_risk(const GenerativeSpec& s) {
    return {Kind::true_enumerated, nullptr, nullptr, &s};
}
RiskTarget RiskTarget::representative_risk(const GenerativeSpec& s) {
    return {Kind::representative_enumerated, nullptr, nullptr, &s};
}

double empirical_risk(const PredictorFn& f, const LossFn& loss, const Dataset& data) {
    if (data.size() == 0) throw ConfigError("empirical_risk: empty dataset");
    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) acc += loss(f(data.xs[i]), data.ys[i]);
    return acc / static_cast<double>(data.size());
}

double empirical_risk_on_representatives(const PredictorFn& f, const LossFn& loss,
                                         const Dataset& data, const OrbitResolver& resolver) {
    if (data.size() == 0) throw ConfigError("representative risk: empty dataset");
    for (std::size_t i = 0; i < data.size(); ++i)
        if (!resolver.is_canonical(data.xs[i]))
            throw ConfigError("representative risk: non-canonical row " + std::to_string(i));
    return empirical_risk(f, loss, data);
}

namespace {

RiskEstimate enumerate_risk(const PredictorFn& f, const LossFn& loss,
                            const std::vector<JointAtom>& atoms) {
    if (atoms.empty()) throw ConfigError("risk: empty atom set");
    RiskEstimate est;
    double acc = 0.0;
    for (const auto& a : atoms) acc += a.prob * loss(f(a.x), a.y);
    est.value = acc;
    est.exact = true;
    est.n_samples = static_cast<long>(atoms.size());
    return est;
}

}  // namespace

RiskEstimate true_risk_enumerate(const PredictorFn& f, const LossFn& loss,
                                 const GenerativeSpec& spec) {
    return enumerate_risk(f, loss, spec.enumerate_joint());
}

RiskEstimate representative_risk_enumerate(const PredictorFn& f, const LossFn& loss,
                                           const GenerativeSpec& spec) {
    return enumerate_risk(f, loss, spec.enumerate_representative_joint());
}

RiskEstimate true_risk_mc(const PredictorFn& f, const LossFn& loss, const GenerativeSpec& spec,
                          long n_draws, std::uint64_t seed) {
    if (n_draws < 2) throw ConfigError("true_risk_mc: need at least 2 draws");
    Rng rng(seed);
    double sum = 0.0, sum_sq = 0.0;
    for (long i = 0; i < n_draws; ++i) {
        const auto [x, y] = spec.sample_pair(rng);
        const double v = loss(f(x), y);
        sum += v;
        sum_sq += v * v;
    }
    RiskEstimate est;
    est.value = sum / static_cast<double>(n_draws);
    est.exact = false;
    est.n_samples = n_draws;
    est.seed = seed;
    const double var = std::max(0.0, sum_sq / n_draws - est.value * est.value);
    est.std_error = std::sqrt(var / static_cast<double>(n_draws));
    return est;
}

std::vector<std::pair<double, double>> loss_distribution(const PredictorFn& f, const LossFn& loss,
                                                         const std::vector<JointAtom>& atoms,
                                                         double value_tol) {
    std::vector<std::pair<double, double>> points;
    points.reserve(atoms.size());
    for (const auto& a : atoms) points.emplace_back(loss(f(a.x), a.y), a.prob);
    std::sort(points.begin(), points.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& [v, p] : points) {
        if (!merged.empty() && v - merged.back().first <= value_tol)
            merged.back().second += p;
        else
            merged.emplace_back(v, p);
    }
    return merged;
}

double gaussian_expected_loss(const LossFn& loss, double mean, double sd, double y) {
    if (sd < 0.0) throw NumericError("gaussian_expected_loss: negative sd");
    if (sd == 0.0) return loss(mean, y);
    switch (loss.kind) {
        case LossKind::squared: {
            const double b = mean - y;
            return b * b + sd * sd;
        }
        case LossKind::squared_clipped: {
            // E[min((z-y)^2, 1)] via partial Gaussian moments on the
            // unclipped band [y-1, y+1].
            const double b = mean - y;
            const double t1 = (-1.0 - b) / sd;
            const double t2 = (1.0 - b) / sd;
            const double phi1 = normal_pdf(t1), phi2 = normal_pdf(t2);
            const double cdf1 = normal_cdf(t1), cdf2 = normal_cdf(t2);
            const double band = b * b * (cdf2 - cdf1) + 2.0 * b * sd * (phi1 - phi2) +
                                sd * sd * ((cdf2 - t2 * phi2) - (cdf1 - t1 * phi1));
            return band + cdf1 + (1.0 - cdf2);
        }
        case LossKind::zero_one:
            // Sign mismatch probability; z = 0 has measure zero for sd > 0.
            return y >= 0.0 ? normal_cdf(-mean / sd) : normal_cdf(mean / sd);
        case LossKind::logistic_normalized:
            throw NumericError("no closed form for the logistic loss expectation");
    }
    throw NumericError("gaussian_expected_loss: unreachable");
}

RiskEstimate posterior_expected_risk(const GaussianMeasure& posterior,
                                     const PredictorFamily& family, const LossFn& loss,
                                     const RiskTarget& target, int n_models, std::uint64_t seed,
                                     bool prefer_exact) {
    if (posterior.dim() != family.param_dim())
        throw DimensionError("posterior dimension != family parameter dimension");
    const auto atoms = atoms_for(target);
    if (atoms.empty()) throw ConfigError("posterior risk: empty atom set");

    const bool closed_form = loss.kind != LossKind::logistic_normalized;
    if (prefer_exact && closed_form) {
        RiskEstimate est;
        double acc = 0.0;
        for (const auto& a : atoms) {
            const auto phi = family.feature(a.x);
            double mean = 0.0;
            for (const auto& [i, c] : phi) mean += posterior.mean()[i] * c;
            double var = 0.0;
            for (const auto& [i, ci] : phi)
                for (const auto& [j, cj] : phi) var += ci * cj * posterior.cov()(i, j);
            acc += a.prob * gaussian_expected_loss(loss, mean, std::sqrt(std::max(0.0, var)), a.y);
        }
        est.value = acc;
        est.exact = true;
        est.n_samples = static_cast<long>(atoms.size());
        return est;
    }

    if (n_models < 2) throw ConfigError("posterior risk: need at least 2 model draws");
    double sum = 0.0, sum_sq = 0.0;
    for (int k = 0; k < n_models; ++k) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(k));
        const Vec w = posterior.sample(rng);
        double risk = 0.0;
        for (const auto& a : atoms) risk += a.prob * loss(family.eval(w, a.x), a.y);
        sum += risk;
        sum_sq += risk * risk;
    }
    RiskEstimate est;
    est.value = sum / n_models;
    est.exact = false;
    est.n_samples = n_models;
    est.seed = seed;
    const double var = std::max(0.0, sum_sq / n_models - est.value * est.value);
    est.std_error = std::sqrt(var / n_models);
    return est;
}

}  // namespace equicert
