#include "equicert/bounds.hpp"

#include "equicert/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace equicert {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void BoundInputs::validate() const {
    if (!(expected_empirical_risk >= 0.0 && expected_empirical_risk <= 1.0))
        throw ConfigError("bound inputs: empirical risk " + fmt_double(expected_empirical_risk) +
                          " outside [0,1]");
    if (std::isnan(kl) || kl < 0.0) throw ConfigError("bound inputs: kl must be >= 0");
    if (n < 1) throw ConfigError("bound inputs: n must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("bound inputs: delta outside (0,1)");
}

double mcallester_complexity(double kl, long n, double delta) {
    if (n < 1) throw ConfigError("complexity: n must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("complexity: delta outside (0,1)");
    if (std::isinf(kl)) return kInf;
    const double num = kl + std::log(1.0 / delta) + std::log(static_cast<double>(n)) + 2.0;
    return std::sqrt(num / (2.0 * static_cast<double>(n) - 1.0));
}

double mcallester_rhs(const BoundInputs& in) {
    in.validate();
    return in.expected_empirical_risk + mcallester_complexity(in.kl, in.n, in.delta);
}

namespace {

BoundReport assemble(const std::string& variant, const PosteriorSpec& used_posterior,
                     const PredictorFamily& family, const LossFn& loss, const RiskTarget& target,
                     long n, double kl, double comparison_kl, const BoundConfig& cfg,
                     const std::string& sample_provenance, const std::string& model_tag) {
    if (!loss.bounded01)
        throw ConfigError(std::string("bound: loss '") + loss.name() +
                          "' is not certified bounded in [0,1]");
    const auto emp = posterior_expected_risk(used_posterior.measure, family, loss, target,
                                             cfg.n_models, cfg.seed, cfg.exact_empirical);
    BoundReport r;
    r.variant = variant;
    r.model_tag = model_tag;
    r.empirical_term = emp.value;
    r.empirical_std_error = emp.std_error;
    r.empirical_exact = emp.exact;
    r.kl = kl;
    r.n = n;
    r.delta = cfg.delta;
    r.n_models = cfg.n_models;
    r.seed = cfg.seed;
    r.kl_provenance = "closed-form";
    r.sample_provenance = sample_provenance;
    BoundInputs in{emp.value, kl, n, cfg.delta};
    r.rhs = mcallester_rhs(in);
    r.complexity_term = mcallester_complexity(kl, n, cfg.delta);
    r.conservative_rhs = r.rhs + 3.0 * emp.std_error;
    r.comparison_kl = comparison_kl;
    r.comparison_rhs = emp.value + mcallester_complexity(comparison_kl, n, cfg.delta);
    return r;
}

}  // namespace

BoundReport mcallester_bound(const PosteriorSpec& posterior, const PosteriorSpec& prior,
                             const PredictorFamily& family, const LossFn& loss,
                             const Dataset& data, const BoundConfig& cfg) {
    const double kl = kl_gaussian(posterior.measure, prior.measure);
    return assemble("mcallester", posterior, family, loss, RiskTarget::empirical(data),
                    static_cast<long>(data.size()), kl, kl, cfg, "full", posterior.tag);
}

namespace {

void check_projection(const ParameterProjection& projection, int dim) {
    if (projection.matrix.rows() != dim || projection.matrix.cols() != dim)
        throw DimensionError("bound: projection shape does not match the family");
    if ((projection.matrix * projection.matrix - projection.matrix).lpNorm<Eigen::Infinity>() >
        1e-10)
        throw NumericError("bound: projection is not idempotent");
}

}  // namespace

BoundReport improved_bound(const PosteriorSpec& posterior, const PosteriorSpec& prior,
                           const ParameterProjection& projection, const PredictorFamily& family,
                           const LossFn& loss, const Dataset& data, const BoundConfig& cfg) {
    check_projection(projection, family.param_dim());
    const PosteriorSpec pushed_q{pushforward_gaussian(projection.matrix, posterior.measure),
                                 posterior.tag};
    const PosteriorSpec pushed_p{pushforward_gaussian(projection.matrix, prior.measure),
                                 prior.tag};
    const double kl = kl_gaussian(pushed_q.measure, pushed_p.measure);
    const double kl_unprojected = kl_gaussian(posterior.measure, prior.measure);
    return assemble("improved", pushed_q, family, loss, RiskTarget::empirical(data),
                    static_cast<long>(data.size()), kl, kl_unprojected, cfg, "full",
                    posterior.tag);
}

BoundReport representative_bound(const PosteriorSpec& posterior, const PosteriorSpec& prior,
                                 const ParameterProjection& projection,
                                 const PredictorFamily& family, const LossFn& loss,
                                 const Dataset& representative_data,
                                 const OrbitResolver& resolver, const BoundConfig& cfg) {
    check_projection(projection, family.param_dim());
    const PosteriorSpec pushed_q{pushforward_gaussian(projection.matrix, posterior.measure),
                                 posterior.tag};
    const PosteriorSpec pushed_p{pushforward_gaussian(projection.matrix, prior.measure),
                                 prior.tag};
    const double kl = kl_gaussian(pushed_q.measure, pushed_p.measure);
    const double kl_unprojected = kl_gaussian(posterior.measure, prior.measure);
    auto r = assemble("representative", pushed_q, family, loss,
                      RiskTarget::empirical_representatives(representative_data, resolver),
                      static_cast<long>(representative_data.size()), kl, kl_unprojected, cfg,
                      "representatives", posterior.tag);
    return r;
}

PriorBuild build_prior(const Dataset& prior_split, const PredictorFamily& family, double sigma,
                       const std::string& tag) {
    if (prior_split.size() == 0) throw ConfigError("prior: empty split");
    if (!(sigma > 0.0)) throw ConfigError("prior: sigma must be > 0");
    const int p = family.param_dim();

    // Normal equations of the squared-loss fit; features are sparse.
    Mat gram = Mat::Zero(p, p);
    Vec moment = Vec::Zero(p);
    for (std::size_t r = 0; r < prior_split.size(); ++r) {
        const auto phi = family.feature(prior_split.xs[r]);
        for (const auto& [i, ci] : phi) {
            moment[i] += ci * prior_split.ys[r];
            for (const auto& [j, cj] : phi) gram(i, j) += ci * cj;
        }
    }

    Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
    if (eig.info() != Eigen::Success) throw NumericError("prior: eigendecomposition failed");
    const double lmax = std::max(1.0, eig.eigenvalues().maxCoeff());
    Vec inv = Vec::Zero(p);
    bool deficient = false;
    for (int i = 0; i < p; ++i) {
        if (eig.eigenvalues()[i] > 1e-10 * lmax)
            inv[i] = 1.0 / eig.eigenvalues()[i];
        else
            deficient = true;  // minimum-norm component: leave the direction at zero
    }
    const Vec mean = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose() *
                     moment;

    PriorBuild out{{GaussianMeasure(mean, sigma * sigma * Mat::Identity(p, p)), tag}, deficient,
                   0.0};
    const LossFn sq = LossFn::make(LossKind::squared);
    out.prior_empirical_risk = empirical_risk(family.predictor(mean), sq, prior_split);
    return out;
}

namespace {

// KL between diagonal Gaussians given as (mean, log-std) against
// (prior mean, prior variances).
double diag_kl(const Vec& m, const Vec& rho, const Vec& m0, const Vec& v0) {
    double kl = 0.0;
    for (int i = 0; i < m.size(); ++i) {
        const double v = std::exp(2.0 * rho[i]);
        const double d = m[i] - m0[i];
        kl += (v + d * d) / (2.0 * v0[i]) - 0.5 + 0.5 * std::log(v0[i]) - rho[i];
    }
    return kl;
}

}  // namespace

OptimizeResult optimize_posterior(const PosteriorSpec& prior, const Dataset& train,
                                  const PredictorFamily& family, const OptimizerConfig& cfg) {
    const int p = family.param_dim();
    if (prior.measure.dim() != p)
        throw DimensionError("optimizer: prior dimension != family parameter dimension");
    if (train.size() == 0) throw ConfigError("optimizer: empty training split");
    const LossFn loss = LossFn::make(cfg.loss);
    if (!loss.differentiable())
        throw ConfigError("optimizer: loss '" + std::string(loss.name()) +
                          "' is not differentiable; choose a surrogate");
    if (!loss.bounded01)
        throw ConfigError("optimizer: surrogate loss must be bounded in [0,1]");
    if (cfg.steps < 0 || cfg.draws < 1 || cfg.eval_every < 1 || !(cfg.lr > 0.0))
        throw ConfigError("optimizer: bad step/draw/lr configuration");

    // The prior must be diagonal for the closed-form KL used throughout.
    const Mat& pc = prior.measure.cov();
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            if (i != j && std::abs(pc(i, j)) > 1e-12)
                throw ConfigError("optimizer: prior covariance must be diagonal");
    Vec v0(p);
    for (int i = 0; i < p; ++i) {
        v0[i] = pc(i, i);
        if (!(v0[i] > 0.0)) throw ConfigError("optimizer: prior variance must be positive");
    }
    const Vec& m0 = prior.measure.mean();

    Vec m = m0;
    Vec rho = (0.5 * v0.array().log()).matrix();  // posterior = prior at init, KL = 0

    const long n = static_cast<long>(train.size());
    const std::uint64_t eval_seed = mix_u64(cfg.seed, 0xE7A1);

    // Precompute features once; the optimizer only touches sparse indices.
    std::vector<Feature> feats;
    feats.reserve(train.size());
    for (const auto& x : train.xs) feats.push_back(family.feature(x));

    auto exact_rhs = [&](const Vec& mean, const Vec& logstd) {
        Vec vars(p);
        for (int i = 0; i < p; ++i) vars[i] = std::exp(2.0 * logstd[i]);
        const GaussianMeasure q = GaussianMeasure::diagonal(mean, vars);
        const auto emp = posterior_expected_risk(q, family, loss, RiskTarget::empirical(train),
                                                 cfg.eval_models, eval_seed, true);
        return emp.value + mcallester_complexity(diag_kl(mean, logstd, m0, v0), n, cfg.delta);
    };

    double best_rhs = exact_rhs(m, rho);
    int best_step = 0;
    std::vector<std::pair<int, double>> trace{{0, best_rhs}};
    Vec best_m = m, best_rho = rho;

    Rng rng(cfg.seed);
    Vec grad_m(p), grad_rho(p), eps(p), w(p);
    for (int step = 1; step <= cfg.steps; ++step) {
        const double lr =
            cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * (step - 1) / std::max(1, cfg.steps)));
        grad_m.setZero();
        grad_rho.setZero();
        for (int d = 0; d < cfg.draws; ++d) {
            for (int i = 0; i < p; ++i) eps[i] = rng.gaussian();
            for (int i = 0; i < p; ++i) w[i] = m[i] + std::exp(rho[i]) * eps[i];
            // d(empirical)/dw accumulated sparsely, then chained through the
            // reparameterization w = m + exp(rho) * eps.
            for (std::size_t r = 0; r < feats.size(); ++r) {
                double pred = 0.0;
                for (const auto& [i, c] : feats[r]) pred += w[i] * c;
                const double g = loss.grad(pred, train.ys[r]) / static_cast<double>(n);
                if (g == 0.0) continue;
                for (const auto& [i, c] : feats[r]) {
                    grad_m[i] += g * c / cfg.draws;
                    grad_rho[i] += g * c * eps[i] * std::exp(rho[i]) / cfg.draws;
                }
            }
        }
        // Complexity term gradient through sqrt((KL + C)/(2n-1)).
        const double kl = diag_kl(m, rho, m0, v0);
        const double comp = mcallester_complexity(kl, n, cfg.delta);
        const double dcomp_dkl = 1.0 / (2.0 * comp * (2.0 * static_cast<double>(n) - 1.0));
        for (int i = 0; i < p; ++i) {
            const double dkl_dm = (m[i] - m0[i]) / v0[i];
            const double dkl_drho = std::exp(2.0 * rho[i]) / v0[i] - 1.0;
            grad_m[i] += dcomp_dkl * dkl_dm;
            grad_rho[i] += dcomp_dkl * dkl_drho;
        }
        if (!grad_m.allFinite() || !grad_rho.allFinite())
            throw NumericError("optimizer: non-finite gradient at step " + std::to_string(step));
        m -= lr * grad_m;
        rho -= lr * grad_rho;
        // Keep exp(rho) representable; the KL gradient already pushes back
        // long before these limits matter.
        for (int i = 0; i < p; ++i) rho[i] = std::clamp(rho[i], -18.0, 4.0);

        if (step % cfg.eval_every == 0 || step == cfg.steps) {
            const double rhs = exact_rhs(m, rho);
            trace.emplace_back(step, rhs);
            if (rhs < best_rhs) {
                best_rhs = rhs;
                best_step = step;
                best_m = m;
                best_rho = rho;
            }
        }
    }

    Vec vars(p);
    for (int i = 0; i < p; ++i) vars[i] = std::exp(2.0 * best_rho[i]);
    return OptimizeResult{{GaussianMeasure::diagonal(best_m, vars), prior.tag},
                          best_rhs,
                          best_step,
                          std::move(trace)};
}

double ValidityReport::worst_frequency() const {
    double worst = 0.0;
    for (const auto& [label, count] : violations)
        worst = std::max(worst, static_cast<double>(count) / std::max(1, trials));
    return worst;
}

ValidityReport validity_trial(const GenerativeSpec& spec, const ValidityConfig& cfg) {
    if (!spec.enumerable())
        throw ConfigError("validity trials need an enumerable scenario");
    const LossFn cert_loss = LossFn::make(spec.certificate_loss());

    const auto base_family = spec.default_family();
    const auto equi_family = spec.equivariant_family(base_family);
    const auto equi_projection =
        build_parameter_projection(equi_family, spec.action(), spec.kernel(), spec.resolver());
    // The baseline projection is optional: some family/kernel combinations
    // are legitimately outside the closure registry.
    bool base_projected = true;
    ParameterProjection base_projection;
    try {
        base_projection =
            build_parameter_projection(base_family, spec.action(), spec.kernel(), spec.resolver());
    } catch (const ClosureNotCertifiedError&) {
        base_projected = false;
    }

    ValidityReport report;
    report.trials = cfg.trials;

    for (int t = 0; t < cfg.trials; ++t) {
        const std::uint64_t trial_seed = mix_u64(cfg.master_seed, static_cast<std::uint64_t>(t));
        const auto train = spec.sample_dataset(cfg.n_train, mix_u64(trial_seed, 1));
        const auto prior_split = spec.sample_dataset(cfg.n_prior, mix_u64(trial_seed, 2));
        const auto rep_data =
            spec.sample_representative_dataset(cfg.n_train, mix_u64(trial_seed, 3));

        BoundConfig bcfg;
        bcfg.delta = cfg.delta;
        bcfg.seed = mix_u64(trial_seed, 4);
        bcfg.exact_empirical = true;

        auto run_model = [&](const PredictorFamily& family, const std::string& tag,
                             std::uint64_t tag_stream, const ParameterProjection* projection) {
            auto prior = build_prior(prior_split, family, cfg.prior_sigma, tag);
            OptimizerConfig ocfg = cfg.opt;
            ocfg.delta = cfg.delta;
            ocfg.seed = mix_u64(trial_seed, tag_stream);
            ocfg.loss = spec.surrogate_loss();
            const auto opt = optimize_posterior(prior.prior, train, family, ocfg);

            auto record = [&](const BoundReport& r, const GaussianMeasure& certified) {
                const auto true_risk =
                    posterior_expected_risk(certified, family, cert_loss,
                                            RiskTarget::true_risk(spec), bcfg.n_models,
                                            mix_u64(trial_seed, 6), true);
                auto& count = report.violations[tag + "/" + r.variant];
                if (true_risk.value > r.rhs) ++count;
            };

            record(mcallester_bound(opt.posterior, prior.prior, family, cert_loss, train, bcfg),
                   opt.posterior.measure);
            if (projection) {
                const GaussianMeasure pushed =
                    pushforward_gaussian(projection->matrix, opt.posterior.measure);
                record(improved_bound(opt.posterior, prior.prior, *projection, family, cert_loss,
                                      train, bcfg),
                       pushed);
                record(representative_bound(opt.posterior, prior.prior, *projection, family,
                                            cert_loss, rep_data, spec.resolver(), bcfg),
                       pushed);
            }
        };

        run_model(base_family, "baseline", 10, base_projected ? &base_projection : nullptr);
        run_model(equi_family, "equivariant", 11, &equi_projection);
    }
    report.certificates_per_trial = static_cast<int>(report.violations.size());
    return report;
}

}  // namespace equicert
