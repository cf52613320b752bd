#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "equicert/risk.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

using namespace equicert;

namespace {

Vec vec1(double a) {
    Vec v(1);
    v << a;
    return v;
}

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

// Composite Simpson on an odd number of points; pieces are split at loss
// kinks before calling this, so the integrand is smooth on [lo, hi].
double simpson(const std::function<double(double)>& f, double lo, double hi, int points = 20001) {
    if (hi <= lo) return 0.0;
    const double h = (hi - lo) / (points - 1);
    double acc = f(lo) + f(hi);
    for (int i = 1; i < points - 1; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// Quadrature oracle for E[loss(z, y)], z ~ N(m, s^2): integrate piecewise
// between the loss kinks so Simpson sees only smooth segments.
double quadrature_expected_loss(const LossFn& loss, double m, double s, double y) {
    const auto pdf = [m, s](double z) {
        const double t = (z - m) / s;
        return std::exp(-0.5 * t * t) / (s * std::sqrt(2.0 * std::numbers::pi));
    };
    const double lo = m - 12.0 * s, hi = m + 12.0 * s;
    if (loss.kind == LossKind::zero_one) {
        // The loss is an indicator; integrate the density over the
        // sign-mismatch region instead of sampling across the jump.
        if (y >= 0.0) return simpson(pdf, lo, std::min(0.0, hi));
        return simpson(pdf, std::max(0.0, lo), hi);
    }
    const auto integrand = [&](double z) { return loss(z, y) * pdf(z); };
    std::vector<double> cuts = {lo, hi};
    if (loss.kind == LossKind::squared_clipped) {
        cuts.push_back(y - 1.0);
        cuts.push_back(y + 1.0);
    }
    std::sort(cuts.begin(), cuts.end());
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = std::max(lo, cuts[i]), b = std::min(hi, cuts[i + 1]);
        acc += simpson(integrand, a, b);
    }
    return acc;
}

Dataset tiny_dataset() {
    Dataset d;
    d.dim = 2;
    d.xs = {vec2(1, 2), vec2(3, 1)};
    d.ys = {0.5, 2.0};
    return d;
}

}  // namespace

TEST_CASE("empirical risk is the plain average of per-row losses") {
    const LossFn sq = LossFn::make(LossKind::squared);
    const PredictorFn f = [](const Vec& x) { return x[0]; };
    // ((1 - 0.5)^2 + (3 - 2)^2) / 2 = 0.625
    CHECK(empirical_risk(f, sq, tiny_dataset()) == doctest::Approx(0.625).epsilon(1e-15));
    CHECK_THROWS_AS(empirical_risk(f, sq, Dataset{}), ConfigError);
}

TEST_CASE("representative risk insists every row is canonical") {
    const GenerativeSpec spec = builtin_scenario("swap-toy");
    const LossFn loss = LossFn::make(spec.certificate_loss());
    const PredictorFn f = [](const Vec& x) { return 0.4 * x[0] + 0.1 * x[1]; };

    const Dataset reps = spec.sample_representative_dataset(100, 5);
    CHECK(empirical_risk_on_representatives(f, loss, reps, spec.resolver()) ==
          empirical_risk(f, loss, reps));

    // A full draw contains swapped points, which the canonical check names.
    Dataset mixed = reps;
    mixed.xs[17] = spec.action().act_input(spec.action().group().by_name("s"), mixed.xs[17]);
    try {
        (void)empirical_risk_on_representatives(f, loss, mixed, spec.resolver());
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("row 17") != std::string::npos);
    }
    CHECK_THROWS_AS(empirical_risk_on_representatives(f, loss, Dataset{}, spec.resolver()),
                    ConfigError);
}

TEST_CASE("enumerated risk agrees with monte carlo within its standard error") {
    const GenerativeSpec spec = builtin_scenario("swap-toy");
    const LossFn loss = LossFn::make(spec.certificate_loss());
    const PredictorFn f = [](const Vec& x) { return 0.3 * x[0] - 0.2 * x[1]; };

    const RiskEstimate exact = true_risk_enumerate(f, loss, spec);
    CHECK(exact.exact);
    CHECK(exact.std_error == 0.0);
    CHECK(exact.seed == 0);
    CHECK(exact.n_samples == 16);
    CHECK(std::string(exact.method()) == "exact-enumeration");

    const RiskEstimate mc = true_risk_mc(f, loss, spec, 20000, 77);
    CHECK_FALSE(mc.exact);
    CHECK(mc.n_samples == 20000);
    CHECK(mc.seed == 77);
    CHECK(std::string(mc.method()) == "monte-carlo");
    CHECK(std::abs(mc.value - exact.value) <= 4.0 * mc.std_error + 1e-9);

    // Same seed, same estimate; the low draw count guard fires.
    const RiskEstimate mc2 = true_risk_mc(f, loss, spec, 20000, 77);
    CHECK(mc.value == mc2.value);
    CHECK_THROWS_AS(true_risk_mc(f, loss, spec, 1, 1), ConfigError);

    // Gaussian label noise cannot be enumerated.
    const GenerativeSpec gauss = spec.with_noise(NoiseModel::parse("gauss:0.1"));
    CHECK_THROWS_AS(true_risk_enumerate(f, loss, gauss), ConfigError);
}

TEST_CASE("representative risk targets the canonical law") {
    const GenerativeSpec spec = builtin_scenario("swap-toy");
    const LossFn loss = LossFn::make(spec.certificate_loss());
    const PredictorFn f = [](const Vec& x) { return 0.3 * x[0] - 0.2 * x[1]; };

    // Direct recomputation from the representative atoms.
    double expected = 0.0;
    for (const auto& a : spec.enumerate_representative_joint())
        expected += a.prob * loss(f(a.x), a.y);
    const RiskEstimate est = representative_risk_enumerate(f, loss, spec);
    CHECK(est.exact);
    CHECK(est.value == doctest::Approx(expected).epsilon(1e-15));
    CHECK(est.n_samples == 8);
}

TEST_CASE("loss distributions sort and merge duplicate values") {
    const LossFn sq = LossFn::make(LossKind::squared);
    const PredictorFn f = [](const Vec& x) { return x[0]; };
    const std::vector<JointAtom> atoms = {
        {vec1(2.0), 0.0, 0.5},   // loss 4
        {vec1(1.0), 0.0, 0.3},   // loss 1
        {vec1(-1.0), 0.0, 0.2},  // loss 1 again
    };
    const auto dist = loss_distribution(f, sq, atoms);
    REQUIRE(dist.size() == 2);
    CHECK(dist[0].first == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(dist[0].second == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(dist[1].first == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(dist[1].second == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("closed-form gaussian losses match piecewise quadrature") {
    const LossFn sq = LossFn::make(LossKind::squared);
    const LossFn cl = LossFn::make(LossKind::squared_clipped);
    const LossFn zo = LossFn::make(LossKind::zero_one);

    const double cases[][3] = {
        // mean, sd, target
        {0.2, 0.5, 0.0},
        {1.5, 1.0, 0.3},
        {-0.7, 0.3, 0.4},
        {0.0, 3.0, 0.0},
        {0.3, 0.8, 1.0},
        {-1.2, 0.5, -1.0},
    };
    for (const auto& c : cases) {
        const double m = c[0], s = c[1], y = c[2];
        CHECK(std::abs(gaussian_expected_loss(sq, m, s, y) - quadrature_expected_loss(sq, m, s, y)) <=
              1e-10);
        CHECK(std::abs(gaussian_expected_loss(cl, m, s, y) - quadrature_expected_loss(cl, m, s, y)) <=
              1e-10);
        CHECK(std::abs(gaussian_expected_loss(zo, m, s, y) - quadrature_expected_loss(zo, m, s, y)) <=
              1e-10);
        CHECK(gaussian_expected_loss(cl, m, s, y) >= 0.0);
        CHECK(gaussian_expected_loss(cl, m, s, y) <= 1.0);
    }

    // Far means saturate the clip; nothing escapes [0, 1].
    CHECK(gaussian_expected_loss(cl, 50.0, 1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gaussian_expected_loss(zo, 50.0, 1.0, 1.0) <= 1e-12);

    // Zero spread collapses to the pointwise loss.
    CHECK(gaussian_expected_loss(sq, 0.7, 0.0, 0.2) == sq(0.7, 0.2));
    CHECK(gaussian_expected_loss(cl, 3.0, 0.0, 0.2) == 1.0);
    CHECK(gaussian_expected_loss(zo, -0.3, 0.0, 1.0) == 1.0);

    CHECK_THROWS_AS(gaussian_expected_loss(LossFn::make(LossKind::logistic_normalized), 0, 1, 0),
                    NumericError);
    CHECK_THROWS_AS(gaussian_expected_loss(sq, 0.0, -1.0, 0.0), NumericError);
}

TEST_CASE("posterior risk closed form agrees with parameter-space monte carlo") {
    const GenerativeSpec spec = builtin_scenario("swap-toy");
    const LossFn loss = LossFn::make(spec.certificate_loss());
    const PredictorFamily lin = spec.default_family();

    Mat cov(2, 2);
    cov << 0.04, 0.015, 0.015, 0.03;  // correlated on purpose
    const GaussianMeasure posterior(vec2(0.25, 0.1), cov);

    const Dataset data = spec.sample_dataset(300, 12);
    const std::vector<RiskTarget> targets = {RiskTarget::empirical(data),
                                             RiskTarget::true_risk(spec),
                                             RiskTarget::representative_risk(spec)};
    for (const auto& target : targets) {
        const RiskEstimate exact = posterior_expected_risk(posterior, lin, loss, target, 0, 0);
        CHECK(exact.exact);
        const RiskEstimate mc =
            posterior_expected_risk(posterior, lin, loss, target, 4000, 21, false);
        CHECK_FALSE(mc.exact);
        CHECK(mc.n_samples == 4000);
        CHECK(std::abs(exact.value - mc.value) <= 4.0 * mc.std_error + 1e-9);
    }

    // Tabular family with the sign loss: one-hot features read the diagonal.
    const GenerativeSpec rot = builtin_scenario("restricted-rotation");
    const PredictorFamily tab = rot.default_family();
    Rng rng(4);
    Vec mean(tab.param_dim());
    for (int i = 0; i < mean.size(); ++i) mean[i] = 0.4 * rng.gaussian();
    Vec vars(tab.param_dim());
    for (int i = 0; i < vars.size(); ++i) vars[i] = 0.01 + 0.05 * rng.uniform01();
    const GaussianMeasure tab_post = GaussianMeasure::diagonal(mean, vars);
    const LossFn zo = LossFn::make(rot.certificate_loss());
    const RiskEstimate exact =
        posterior_expected_risk(tab_post, tab, zo, RiskTarget::true_risk(rot), 0, 0);
    CHECK(exact.exact);
    const RiskEstimate mc =
        posterior_expected_risk(tab_post, tab, zo, RiskTarget::true_risk(rot), 4000, 22, false);
    CHECK(std::abs(exact.value - mc.value) <= 4.0 * mc.std_error + 1e-9);

    // The logistic loss has no closed form: even prefer_exact falls back.
    const LossFn lg = LossFn::make(LossKind::logistic_normalized);
    const RiskEstimate fallback =
        posterior_expected_risk(posterior, lin, lg, RiskTarget::empirical(data), 256, 3);
    CHECK_FALSE(fallback.exact);
    CHECK(fallback.std_error > 0.0);

    CHECK_THROWS_AS(posterior_expected_risk(GaussianMeasure::standard(3), lin, loss,
                                            RiskTarget::empirical(data), 16, 1),
                    DimensionError);
    CHECK_THROWS_AS(
        posterior_expected_risk(posterior, lin, lg, RiskTarget::empirical(data), 1, 1),
        ConfigError);

    // Representative-data targets revalidate canonicality inside the atoms.
    Dataset mixed = spec.sample_representative_dataset(50, 8);
    mixed.xs[3] = spec.action().act_input(spec.action().group().by_name("s"), mixed.xs[3]);
    CHECK_THROWS_AS(
        posterior_expected_risk(posterior, lin, loss,
                                RiskTarget::empirical_representatives(mixed, spec.resolver()), 16, 1),
        ConfigError);
}
