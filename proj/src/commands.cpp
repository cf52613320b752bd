#include "equicert/commands.hpp"

#include "equicert/csv.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>

namespace equicert {

namespace {

namespace fs = std::filesystem;

// CsvTable fields must stay comma/newline free; free-text diagnostics are
// flattened before they enter a row.
std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

std::string prepare_out_dir(const RunConfig& cfg) {
    const std::string dir = cfg.get_str("run.out_dir");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    write_text_atomic(dir + "/resolved_config.cfg", cfg.resolved_text());
    return dir;
}

LossFn loss_from_config(const RunConfig& cfg, const std::string& key, LossKind fallback) {
    const std::string name = cfg.get_str(key);
    if (name == "auto") return LossFn::make(fallback);
    return LossFn::parse(name);
}

BoundConfig bound_config(const RunConfig& cfg, std::uint64_t seed) {
    BoundConfig b;
    b.delta = cfg.get_double("bound.delta");
    b.n_models = static_cast<int>(cfg.get_long("bound.n_models"));
    b.exact_empirical = cfg.get_bool("bound.exact_empirical");
    b.seed = mix_u64(seed, 20);
    return b;
}

OptimizerConfig optimizer_config(const RunConfig& cfg, const GenerativeSpec& spec) {
    OptimizerConfig o;
    o.steps = static_cast<int>(cfg.get_long("opt.steps"));
    o.lr = cfg.get_double("opt.lr");
    o.draws = static_cast<int>(cfg.get_long("opt.draws"));
    o.eval_every = static_cast<int>(cfg.get_long("opt.eval_every"));
    o.eval_models = static_cast<int>(cfg.get_long("opt.eval_models"));
    o.delta = cfg.get_double("bound.delta");
    o.loss = loss_from_config(cfg, "opt.loss", spec.surrogate_loss()).kind;
    return o;
}

const std::vector<std::string>& certificate_columns() {
    static const std::vector<std::string> cols = {
        "variant",      "rhs",    "empirical_term", "complexity_term",
        "kl",           "n",      "delta",          "n_models",
        "seed",         "conservative_rhs",         "model_tag",
        "status",       "empirical_std_error",      "empirical_exact",
        "kl_provenance", "sample_provenance",       "comparison_rhs",
        "comparison_kl"};
    return cols;
}

void add_certificate_row(CsvTable& t, const BoundReport& r) {
    t.add_row({r.variant, fmt_double(r.rhs), fmt_double(r.empirical_term),
               fmt_double(r.complexity_term), fmt_double(r.kl), std::to_string(r.n),
               fmt_double(r.delta), std::to_string(r.n_models), std::to_string(r.seed),
               fmt_double(r.conservative_rhs), r.model_tag, "ok",
               fmt_double(r.empirical_std_error), r.empirical_exact ? "true" : "false",
               r.kl_provenance, r.sample_provenance, fmt_double(r.comparison_rhs),
               fmt_double(r.comparison_kl)});
}

void add_skipped_row(CsvTable& t, const std::string& variant, const std::string& tag,
                     const std::string& reason) {
    const std::string nan = fmt_double(std::numeric_limits<double>::quiet_NaN());
    t.add_row({variant, nan, nan, nan, nan, "0", nan, "0", "0", nan, tag,
               "skipped: " + csv_safe(reason), nan, "false", "", "", nan, nan});
}

// cyclic(4) with one corrupted product (r1*r2 = r0 instead of r3); trips the
// associativity scan while leaving shape checks happy.
GroupTable broken_table() {
    std::vector<std::vector<int>> compose(4, std::vector<int>(4));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) compose[i][j] = (i + j) % 4;
    compose[1][2] = 0;
    return GroupTable::from_raw(std::move(compose), {0, 3, 2, 1}, 0, {"r0", "r1", "r2", "r3"});
}

void merge_report(SuiteResult& suite, const PropertyReport& r) {
    suite.cases += r.cases;
    suite.max_deviation = std::max(suite.max_deviation, r.max_deviation);
    if (!r.pass && suite.status != "fail") {
        suite.status = "fail";
        suite.detail = r.detail;
    }
}

// Signals whose canonicalizing shift exists: support starts within
// max_abs_shift of the alignment base and, once aligned, the whole pattern
// survives every shift the group can apply.
std::vector<Vec> shift_probes(const GroupAction& action, int base, int count,
                              std::uint64_t seed) {
    const int window = action.dim();
    const int range = action.group().max_abs_shift();
    const int max_len = std::max(1, window - base - range);
    Rng rng(seed);
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const int len = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(max_len));
        const int off = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(2 * range + 1)) - range;
        Vec x = Vec::Zero(window);
        for (int j = 0; j < len; ++j) {
            double v = rng.gaussian();
            if (std::abs(v) < 1e-3) v = (v < 0 ? v - 1e-3 : v + 1e-3);
            x[base + off + j] = v;
        }
        out.push_back(std::move(x));
    }
    return out;
}

std::vector<Vec> resolver_probes(const GenerativeSpec& spec, int sampled, std::uint64_t seed) {
    std::vector<Vec> xs = spec.enumerate_inputs();
    Rng rng = Rng::stream(seed, 1);
    for (int i = 0; i < sampled; ++i) xs.push_back(spec.sample_pair(rng).first);
    return xs;
}

// Per orbit class, the prediction interval on which the loss is certifiably
// convex for every noise atom of that class's target (empty pair = empty).
std::vector<std::pair<double, double>> convexity_windows(const GenerativeSpec& spec,
                                                         const LossFn& loss) {
    std::vector<std::pair<double, double>> windows;
    for (double target : spec.representative_targets()) {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (const auto& [y, p] : spec.noise().atoms(target)) {
            (void)p;
            lo = std::max(lo, y - loss.convex_halfwidth);
            hi = std::min(hi, y + loss.convex_halfwidth);
        }
        windows.emplace_back(lo, hi);
    }
    return windows;
}

struct GridAxis {
    bool active = false;
    std::vector<double> values;  // one dummy entry when inactive
};

GridAxis make_axis(std::vector<double> vals) {
    GridAxis a;
    a.active = !vals.empty();
    a.values = a.active ? std::move(vals) : std::vector<double>{0.0};
    return a;
}

}  // namespace

GenerativeSpec scenario_from_config(const RunConfig& cfg) {
    const std::string name = cfg.get_str("scenario.name");
    const int order = static_cast<int>(cfg.get_long("group.order"));
    GenerativeSpec spec = builtin_scenario(name, order);

    const std::string kernel = cfg.get_str("kernel.spec");
    if (kernel == "uniform") {
        spec = spec.with_kernel(GroupKernel::uniform(spec.action().group_ptr()));
    } else if (kernel.rfind("mix:", 0) == 0) {
        spec = spec.with_kernel(spec.kernel().mixed_with_uniform(parse_double(kernel.substr(4))));
    } else if (kernel != "default") {
        throw ConfigError("kernel.spec: expected default | uniform | mix:t, got '" + kernel + "'");
    }

    const std::string noise = cfg.get_str("scenario.noise");
    if (noise != "default") spec = spec.with_noise(NoiseModel::parse(noise));
    return spec;
}

PredictorFamily family_from_config(const RunConfig& cfg, const GenerativeSpec& spec) {
    const std::string fam = cfg.get_str("model.family");
    if (fam == "auto") return spec.default_family();
    if (fam == "linear") return PredictorFamily::linear(spec.action().dim());
    if (fam == "tabular") return spec.tabular_family();
    throw ConfigError("model.family: expected auto | linear | tabular, got '" + fam + "'");
}

std::vector<SuiteResult> run_property_suites(const GenerativeSpec& spec,
                                             const LossFn& reduction_loss, std::uint64_t seed,
                                             bool corrupt_group) {
    std::vector<SuiteResult> out;
    const LossFn cert_loss = LossFn::make(spec.certificate_loss());

    {
        const GroupTable table = corrupt_group ? broken_table() : spec.action().group();
        const AxiomReport ar = verify_group_axioms(table);
        out.push_back({"group-axioms", ar.pass() ? "pass" : "fail", ar.cases_checked, 0.0,
                       csv_safe(ar.witness)});
    }

    const std::vector<Vec> xs = resolver_probes(spec, 200, seed);
    {
        SuiteResult free_action{"free-action", "pass", 0, 0.0, ""};
        SuiteResult round_trip{"resolver-round-trip", "pass", 0, 0.0, ""};
        for (const Vec& x : xs) {
            ++free_action.cases;
            OrbitDecomposition dec;
            try {
                dec = spec.resolver().resolve(x);
            } catch (const NonFreeOrbitError& e) {
                if (free_action.status != "fail") {
                    free_action.status = "fail";
                    free_action.detail = csv_safe(e.what());
                }
                continue;
            }
            ++round_trip.cases;
            const double dev = (spec.action().act_input(dec.group_part, dec.representative) - x)
                                   .cwiseAbs()
                                   .maxCoeff();
            round_trip.max_deviation = std::max(round_trip.max_deviation, dev);
            const bool canonical = spec.resolver().is_canonical(dec.representative);
            if ((dev > 1e-9 || !canonical) && round_trip.status != "fail") {
                round_trip.status = "fail";
                round_trip.detail = canonical ? "recomposition drifted beyond 1e-9"
                                              : "resolved representative is not canonical";
            }
        }
        out.push_back(std::move(free_action));
        out.push_back(std::move(round_trip));
    }

    // Operator laws on every distinct builtin family for this scenario.
    {
        std::vector<PredictorFamily> families = {spec.default_family()};
        if (families.front().base() != FamilyBase::tabular) families.push_back(spec.tabular_family());

        SuiteResult equiv{"averaged-equivariance", "pass", 0, 0.0, ""};
        SuiteResult idem{"averaging-idempotent", "pass", 0, 0.0, ""};
        SuiteResult fixed{"equivariant-fixed-point", "pass", 0, 0.0, ""};
        int fam_index = 0;
        for (const PredictorFamily& fam : families) {
            const std::vector<Vec> probes =
                audit_probes(fam, spec.action(), spec.kernel(), 60, mix_u64(seed, 3 + fam_index));
            Rng draw = Rng::stream(seed, 40 + fam_index);
            for (int k = 0; k < 20; ++k) {
                Vec w(fam.param_dim());
                for (int i = 0; i < w.size(); ++i) w[i] = draw.gaussian();
                const PredictorFn qf =
                    average_function(fam.predictor(w), spec.kernel(), spec.resolver());
                merge_report(equiv, check_equivariant(qf, spec.resolver(), probes));
            }
            merge_report(idem, check_idempotent(fam, spec.kernel(), spec.resolver(), probes, 20,
                                                mix_u64(seed, 50 + fam_index)));
            merge_report(fixed, check_fixed_point(fam, spec.kernel(), spec.resolver(), probes, 20,
                                                  mix_u64(seed, 60 + fam_index)));
            ++fam_index;
        }
        out.push_back(std::move(equiv));
        out.push_back(std::move(idem));
        out.push_back(std::move(fixed));
    }

    {
        SuiteResult mono{"pushforward-kl-monotone", "pass", 0, 0.0, ""};
        Rng rng = Rng::stream(seed, 7);
        for (int t = 0; t < 200; ++t) {
            const int k = 2 + static_cast<int>(rng.next_u64() % 7);
            const int m = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(k));
            std::vector<double> nu(static_cast<std::size_t>(k)), mu(static_cast<std::size_t>(k));
            double sn = 0.0, sm = 0.0;
            for (int i = 0; i < k; ++i) {
                nu[static_cast<std::size_t>(i)] = 0.05 + rng.uniform01();
                mu[static_cast<std::size_t>(i)] = 0.05 + rng.uniform01();
                sn += nu[static_cast<std::size_t>(i)];
                sm += mu[static_cast<std::size_t>(i)];
            }
            for (int i = 0; i < k; ++i) {
                nu[static_cast<std::size_t>(i)] /= sn;
                mu[static_cast<std::size_t>(i)] /= sm;
            }
            std::vector<int> alpha(static_cast<std::size_t>(k));
            for (int i = 0; i < k; ++i)
                alpha[static_cast<std::size_t>(i)] = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(m));
            const auto dec =
                kl_decompose_discrete(DiscreteMeasure(nu), DiscreteMeasure(mu), alpha, m);
            ++mono.cases;
            const double excess = dec.pushforward_kl - dec.total;
            mono.max_deviation = std::max(mono.max_deviation, excess);
            if ((excess > 1e-12 || dec.residual < -1e-12) && mono.status != "fail") {
                mono.status = "fail";
                mono.detail = "pushforward divergence exceeded the unprojected one";
            }
        }
        out.push_back(std::move(mono));
    }

    {
        SuiteResult risk{"averaging-risk-nonincrease", "pass", 0, 0.0, ""};
        if (!reduction_loss.convex_in_first || !reduction_loss.bounded01) {
            risk.status = "skip";
            risk.detail = std::string("loss '") + reduction_loss.name() +
                          "' is not convex and bounded; nothing to certify";
        } else if (!spec.enumerable()) {
            risk.status = "skip";
            risk.detail = "scenario risk is not exactly enumerable under this noise";
        } else {
            const PredictorFamily fam = spec.tabular_family();
            const std::vector<int> klass = spec.orbit_class_of_inputs();
            const auto windows = convexity_windows(spec, reduction_loss);
            bool empty_window = false;
            for (const auto& [lo, hi] : windows) empty_window = empty_window || !(lo < hi);
            if (empty_window) {
                risk.status = "skip";
                risk.detail = "convexity window is empty for some orbit target";
            } else {
                Rng rng = Rng::stream(seed, 8);
                for (int t = 0; t < 100; ++t) {
                    Vec w(fam.param_dim());
                    for (int i = 0; i < w.size(); ++i) {
                        const auto& [lo, hi] = windows[static_cast<std::size_t>(
                            klass[static_cast<std::size_t>(i)])];
                        const double margin = 0.05 * (hi - lo);
                        w[i] = lo + margin + (hi - lo - 2 * margin) * rng.uniform01();
                    }
                    const PredictorFn f = fam.predictor(w);
                    const PredictorFn qf = average_function(f, spec.kernel(), spec.resolver());
                    const double rf = true_risk_enumerate(f, reduction_loss, spec).value;
                    const double rqf = true_risk_enumerate(qf, reduction_loss, spec).value;
                    ++risk.cases;
                    risk.max_deviation = std::max(risk.max_deviation, rqf - rf);
                    if (rqf > rf + 1e-12 && risk.status != "fail") {
                        risk.status = "fail";
                        risk.detail = "averaging raised the exact risk";
                    }
                }
            }
        }
        out.push_back(std::move(risk));
    }

    {
        SuiteResult law{"loss-law-representative-match", "pass", 0, 0.0, ""};
        SuiteResult ident{"representative-risk-identity", "pass", 0, 0.0, ""};
        if (!spec.enumerable()) {
            law.status = ident.status = "skip";
            law.detail = ident.detail = "scenario risk is not exactly enumerable under this noise";
        } else {
            const PredictorFamily tied = spec.equivariant_family(spec.tabular_family());
            const auto joint = spec.enumerate_joint();
            const auto rep_joint = spec.enumerate_representative_joint();
            Rng rng = Rng::stream(seed, 9);
            for (int t = 0; t < 20; ++t) {
                Vec w(tied.param_dim());
                for (int i = 0; i < w.size(); ++i) w[i] = rng.gaussian();
                const PredictorFn f = tied.predictor(w);

                const auto da = loss_distribution(f, cert_loss, joint);
                const auto db = loss_distribution(f, cert_loss, rep_joint);
                ++law.cases;
                if (da.size() != db.size()) {
                    if (law.status != "fail") {
                        law.status = "fail";
                        law.detail = "loss laws have different support sizes";
                    }
                } else {
                    for (std::size_t i = 0; i < da.size(); ++i) {
                        const double dv = std::abs(da[i].first - db[i].first);
                        const double dp = std::abs(da[i].second - db[i].second);
                        law.max_deviation = std::max(law.max_deviation, std::max(dv, dp));
                        if ((dv > 1e-12 || dp > 1e-12) && law.status != "fail") {
                            law.status = "fail";
                            law.detail = "loss laws disagree at value " + fmt_double(da[i].first);
                        }
                    }
                }

                const double full = true_risk_enumerate(f, cert_loss, spec).value;
                const double reduced = representative_risk_enumerate(f, cert_loss, spec).value;
                ++ident.cases;
                ident.max_deviation = std::max(ident.max_deviation, std::abs(full - reduced));
                if (std::abs(full - reduced) > 1e-12 && ident.status != "fail") {
                    ident.status = "fail";
                    ident.detail = "full and representative risks differ";
                }
            }
        }
        out.push_back(std::move(law));
        out.push_back(std::move(ident));
    }

    return out;
}

int cmd_kl_demo(const RunConfig& cfg, const std::string& projection_mode, std::ostream& log) {
    const std::string out = prepare_out_dir(cfg);

    Mat a;
    if (projection_mode == "averaging") {
        // End to end through the averaging machinery: for the order-2 swap
        // acting on R^2 with the uniform kernel, the linear family's
        // parameter projection is the coordinate-mean map.
        auto table = std::make_shared<const GroupTable>(GroupTable::symmetric2());
        const GroupAction action = GroupAction::coordinate_reversal(table, 2);
        const OrbitResolver resolver(action, CanonicalRule::lex_max);
        a = build_parameter_projection(PredictorFamily::linear(2), action,
                                       GroupKernel::uniform(table), resolver)
                .matrix;
    } else if (projection_mode == "identity") {
        a = Mat::Identity(2, 2);
    } else if (projection_mode == "skew") {
        a = Mat(2, 2);
        a << 1.0, 0.3, 0.0, 0.9;  // deliberately not idempotent
    } else {
        throw ConfigError("--projection: expected averaging | identity | skew, got '" +
                          projection_mode + "'");
    }

    const GaussianMeasure mu = GaussianMeasure::standard(2);
    Vec shifted(2);
    shifted << 1.0, 0.0;
    const GaussianMeasure nu(shifted, Mat::Identity(2, 2));

    KlDecomposition dec;
    try {
        dec = kl_decompose_gaussian(nu, mu, a);
    } catch (const NumericError& e) {
        log << "projection rejected: " << e.what() << "\n";
        return 2;
    }

    const bool identity = projection_mode == "identity";
    const double expected[3] = {0.5, identity ? 0.5 : 0.25, identity ? 0.0 : 0.25};
    const double values[3] = {dec.total, dec.pushforward_kl, dec.residual};
    const char* names[3] = {"total_kl", "pushforward_kl", "residual"};

    CsvTable t({"quantity", "value", "expected", "abs_error"});
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
        const double err = std::abs(values[i] - expected[i]);
        ok = ok && err <= 1e-12;
        t.add_row({names[i], fmt_double(values[i]), fmt_double(expected[i]), fmt_double(err)});
        log << names[i] << " = " << fmt_double(values[i]) << " (expected "
            << fmt_double(expected[i]) << ")\n";
    }
    t.write(out + "/kl_demo.csv");
    log << (ok ? "divergence split reproduced exactly\n" : "divergence split MISMATCH\n");
    return ok ? 0 : 1;
}

int cmd_axioms_check(const RunConfig& cfg, std::ostream& log) {
    const std::string out = prepare_out_dir(cfg);
    const std::uint64_t seed = cfg.get_seed("run.seed");
    const bool corrupt = cfg.get_bool("test.corrupt_group");

    std::vector<SuiteResult> results;
    const std::string kind = cfg.get_str("group.kind");
    if (kind.empty()) {
        const GenerativeSpec spec = scenario_from_config(cfg);
        const LossFn loss = loss_from_config(cfg, "bound.loss", spec.certificate_loss());
        results = run_property_suites(spec, loss, seed, corrupt);
    } else {
        // Standalone group mode: structural suites only, no scenario law.
        GroupPtr table;
        int align_base = 0;
        if (kind == "cyclic") {
            const int order = static_cast<int>(cfg.get_long("group.order"));
            if (order < 1) throw ConfigError("group.order must be >= 1 for group.kind=cyclic");
            table = std::make_shared<const GroupTable>(GroupTable::cyclic(order));
        } else if (kind == "symmetric2") {
            table = std::make_shared<const GroupTable>(GroupTable::symmetric2());
        } else if (kind == "shift") {
            const int range = static_cast<int>(cfg.get_long("group.shift_range"));
            table = std::make_shared<const GroupTable>(GroupTable::integer_shifts(range));
        } else {
            throw ConfigError("group.kind: expected cyclic | symmetric2 | shift, got '" + kind +
                              "'");
        }

        const AxiomReport ar = corrupt ? verify_group_axioms(broken_table())
                                       : verify_group_axioms(*table);
        results.push_back({"group-axioms", ar.pass() ? "pass" : "fail", ar.cases_checked, 0.0,
                           csv_safe(ar.witness)});

        GroupAction action = [&] {
            if (kind == "cyclic") return GroupAction::planar_rotation(table, 4);
            if (kind == "symmetric2") return GroupAction::coordinate_reversal(table, 2);
            const int window = static_cast<int>(cfg.get_long("group.window"));
            return GroupAction::index_shift(table, window);
        }();
        const CanonicalRule rule = kind == "cyclic"       ? CanonicalRule::angle_sector
                                   : kind == "symmetric2" ? CanonicalRule::lex_max
                                                          : CanonicalRule::support_left_align;
        if (kind == "shift") align_base = table->max_abs_shift();
        const OrbitResolver resolver(action, rule, align_base);

        std::vector<Vec> xs;
        if (kind == "shift") {
            xs = shift_probes(action, align_base, 200, mix_u64(seed, 1));
        } else {
            Rng rng = Rng::stream(seed, 1);
            for (int i = 0; i < 200; ++i) {
                Vec x(action.dim());
                for (int j = 0; j < x.size(); ++j) x[j] = rng.gaussian();
                xs.push_back(std::move(x));
            }
        }
        SuiteResult free_action{"free-action", "pass", 0, 0.0, ""};
        SuiteResult round_trip{"resolver-round-trip", "pass", 0, 0.0, ""};
        for (const Vec& x : xs) {
            ++free_action.cases;
            OrbitDecomposition dec;
            try {
                dec = resolver.resolve(x);
            } catch (const NonFreeOrbitError& e) {
                if (free_action.status != "fail") {
                    free_action.status = "fail";
                    free_action.detail = csv_safe(e.what());
                }
                continue;
            }
            ++round_trip.cases;
            const double dev =
                (action.act_input(dec.group_part, dec.representative) - x).cwiseAbs().maxCoeff();
            round_trip.max_deviation = std::max(round_trip.max_deviation, dev);
            if ((dev > 1e-9 || !resolver.is_canonical(dec.representative)) &&
                round_trip.status != "fail") {
                round_trip.status = "fail";
                round_trip.detail = "round trip drifted beyond 1e-9";
            }
        }
        results.push_back(std::move(free_action));
        results.push_back(std::move(round_trip));
        for (const char* name : {"averaged-equivariance", "averaging-idempotent",
                                 "equivariant-fixed-point", "pushforward-kl-monotone",
                                 "averaging-risk-nonincrease", "loss-law-representative-match",
                                 "representative-risk-identity"})
            results.push_back(
                {name, "skip", 0, 0.0, "standalone group mode carries no scenario law"});
    }

    CsvTable t({"suite", "status", "cases", "max_deviation", "detail"});
    std::string first_fail;
    for (const SuiteResult& r : results) {
        t.add_row({r.suite, r.status, std::to_string(r.cases), fmt_double(r.max_deviation),
                   csv_safe(r.detail)});
        log << r.status << "  " << r.suite << " (" << r.cases << " cases";
        if (r.status == "skip") log << "; " << r.detail;
        log << ")\n";
        if (r.status == "fail" && first_fail.empty()) first_fail = r.suite;
    }
    t.write(out + "/axioms_report.csv");
    if (!first_fail.empty()) {
        log << "first failing suite: " << first_fail << "\n";
        return 1;
    }
    return 0;
}

int cmd_gen_data(const RunConfig& cfg, std::ostream& log) {
    const std::string out = prepare_out_dir(cfg);
    const GenerativeSpec spec = scenario_from_config(cfg);
    const std::uint64_t seed = cfg.get_seed("run.seed");

    const long train_n = cfg.get_long("scenario.train_n");
    const long val_n = cfg.get_long("scenario.val_n");
    const long prior_n = cfg.get_long("scenario.prior_n");
    long rep_n = cfg.get_long("scenario.rep_n");
    if (rep_n == 0) rep_n = train_n;
    for (long n : {train_n, val_n, prior_n, rep_n})
        if (n < 1) throw ConfigError("dataset sizes must be >= 1");

    const Dataset train = spec.sample_dataset(train_n, mix_u64(seed, 1));
    const Dataset val = spec.sample_dataset(val_n, mix_u64(seed, 2));
    const Dataset prior = spec.sample_dataset(prior_n, mix_u64(seed, 3));
    const Dataset reps = spec.sample_representative_dataset(rep_n, mix_u64(seed, 4));
    for (const Vec& x : reps.xs)
        if (!spec.resolver().is_canonical(x))
            throw NumericError("representative sample produced a non-canonical row");

    save_dataset_csv(train, out + "/train.csv");
    save_dataset_csv(val, out + "/val.csv");
    save_dataset_csv(prior, out + "/prior.csv");
    save_dataset_csv(reps, out + "/representatives.csv");
    log << "wrote " << train.size() << "/" << val.size() << "/" << prior.size() << "/"
        << reps.size() << " rows (train/val/prior/representatives) for " << spec.name() << "\n";
    return 0;
}

namespace {

struct TrainedModel {
    std::string tag;
    PredictorFamily family;
    PriorBuild prior;
    OptimizeResult opt;
};

TrainedModel train_model(const std::string& tag, const PredictorFamily& family,
                         const Dataset& train, const Dataset& prior_split, double sigma,
                         OptimizerConfig ocfg, std::uint64_t seed, std::uint64_t stream,
                         std::ostream& log) {
    PriorBuild pb = build_prior(prior_split, family, sigma, tag);
    if (pb.rank_deficient)
        log << tag << ": prior regression is rank deficient; minimum-norm solution used\n";
    ocfg.seed = mix_u64(seed, stream);
    OptimizeResult opt = optimize_posterior(pb.prior, train, family, ocfg);
    log << tag << ": posterior optimized, best step " << opt.best_step << ", surrogate rhs "
        << fmt_double(opt.best_rhs) << "\n";
    return {tag, family, std::move(pb), std::move(opt)};
}

}  // namespace

int cmd_certify(const RunConfig& cfg, std::ostream& log) {
    const std::string out = prepare_out_dir(cfg);
    const GenerativeSpec spec = scenario_from_config(cfg);
    const std::uint64_t seed = cfg.get_seed("run.seed");

    const Dataset train = load_dataset_csv(out + "/train.csv");
    const Dataset val = load_dataset_csv(out + "/val.csv");
    const Dataset reps = load_dataset_csv(out + "/representatives.csv");
    const Dataset prior_split = load_dataset_csv(out + "/prior.csv");

    const LossFn cert_loss = loss_from_config(cfg, "bound.loss", spec.certificate_loss());
    const BoundConfig bcfg = bound_config(cfg, seed);
    const OptimizerConfig ocfg = optimizer_config(cfg, spec);
    const double sigma = cfg.get_double("bound.prior_sigma");

    const PredictorFamily base = family_from_config(cfg, spec);
    const PredictorFamily equi = spec.equivariant_family(base);

    CsvTable certs(certificate_columns());
    CsvTable risks({"tag", "method", "value", "std_error", "n", "seed"});
    CsvTable trace({"model_tag", "step", "rhs"});

    const std::pair<const char*, const PredictorFamily*> models[] = {{"baseline", &base},
                                                                     {"equivariant", &equi}};
    std::uint64_t stream = 10;
    for (const auto& [tag, fam] : models) {
        const TrainedModel m =
            train_model(tag, *fam, train, prior_split, sigma, ocfg, seed, stream, log);
        for (const auto& [step, rhs] : m.opt.rhs_trace)
            trace.add_row({tag, std::to_string(step), fmt_double(rhs)});

        const BoundReport mc =
            mcallester_bound(m.opt.posterior, m.prior.prior, *fam, cert_loss, train, bcfg);
        add_certificate_row(certs, mc);
        log << tag << ": mcallester rhs " << fmt_double(mc.rhs) << "\n";

        try {
            const ParameterProjection proj =
                build_parameter_projection(*fam, spec.action(), spec.kernel(), spec.resolver());
            const BoundReport imp = improved_bound(m.opt.posterior, m.prior.prior, proj, *fam,
                                                   cert_loss, train, bcfg);
            const BoundReport rep =
                representative_bound(m.opt.posterior, m.prior.prior, proj, *fam, cert_loss, reps,
                                     spec.resolver(), bcfg);
            add_certificate_row(certs, imp);
            add_certificate_row(certs, rep);
            log << tag << ": improved rhs " << fmt_double(imp.rhs) << " (projection "
                << proj.provenance << "), representative rhs " << fmt_double(rep.rhs) << "\n";
        } catch (const ClosureNotCertifiedError& e) {
            add_skipped_row(certs, "improved", tag, e.what());
            add_skipped_row(certs, "representative", tag, e.what());
            log << tag << ": projection not certified (" << e.what()
                << "); improved/representative variants skipped\n";
        }

        const RiskTarget vt = RiskTarget::empirical(val);
        const RiskEstimate exact = posterior_expected_risk(
            m.opt.posterior.measure, *fam, cert_loss, vt, bcfg.n_models, mix_u64(bcfg.seed, stream),
            true);
        risks.add_row({tag, exact.method(), fmt_double(exact.value), fmt_double(exact.std_error),
                       std::to_string(exact.n_samples), std::to_string(exact.seed)});
        const RiskEstimate mc_est = posterior_expected_risk(
            m.opt.posterior.measure, *fam, cert_loss, vt, bcfg.n_models,
            mix_u64(bcfg.seed, stream + 1), false);
        risks.add_row({tag, mc_est.method(), fmt_double(mc_est.value),
                       fmt_double(mc_est.std_error), std::to_string(mc_est.n_samples),
                       std::to_string(mc_est.seed)});
        stream += 2;
    }

    certs.write(out + "/certificates.csv");
    risks.write(out + "/validation_risk.csv");
    trace.write(out + "/optimizer_trace.csv");
    log << "certificates written to " << out << "/certificates.csv\n";
    return 0;
}

int cmd_compare(const RunConfig& cfg, std::ostream& log) {
    const std::string out = prepare_out_dir(cfg);
    const GenerativeSpec spec = scenario_from_config(cfg);
    const std::uint64_t seed = cfg.get_seed("run.seed");

    const Dataset train = load_dataset_csv(out + "/train.csv");
    const Dataset prior_split = load_dataset_csv(out + "/prior.csv");
    const Dataset test = spec.sample_dataset(cfg.get_long("scenario.test_n"), mix_u64(seed, 5));

    const LossFn cert_loss = loss_from_config(cfg, "bound.loss", spec.certificate_loss());
    const BoundConfig bcfg = bound_config(cfg, seed);
    const OptimizerConfig ocfg = optimizer_config(cfg, spec);
    const double sigma = cfg.get_double("bound.prior_sigma");

    const PredictorFamily base = family_from_config(cfg, spec);
    const PredictorFamily equi = spec.equivariant_family(base);

    CsvTable hist({"model_tag", "sample_index", "test_error"});
    CsvTable summary(
        {"model_tag", "variant", "rhs", "conservative_rhs", "mean_test_error", "n_models"});

    const std::pair<const char*, const PredictorFamily*> models[] = {{"baseline", &base},
                                                                     {"equivariant", &equi}};
    std::uint64_t stream = 10;
    for (const auto& [tag, fam] : models) {
        const TrainedModel m =
            train_model(tag, *fam, train, prior_split, sigma, ocfg, seed, stream, log);

        // Headline certificate: the classical bound for the unconstrained
        // model, the projected bound for the equivariant one.
        BoundReport headline;
        if (std::string(tag) == "baseline") {
            headline = mcallester_bound(m.opt.posterior, m.prior.prior, *fam, cert_loss, train,
                                        bcfg);
        } else {
            const ParameterProjection proj =
                build_parameter_projection(*fam, spec.action(), spec.kernel(), spec.resolver());
            headline = improved_bound(m.opt.posterior, m.prior.prior, proj, *fam, cert_loss,
                                      train, bcfg);
        }

        double sum = 0.0;
        for (int j = 0; j < bcfg.n_models; ++j) {
            Rng draw = Rng::stream(mix_u64(seed, 30 + stream), static_cast<std::uint64_t>(j));
            const Vec w = m.opt.posterior.measure.sample(draw);
            const double err = empirical_risk(fam->predictor(w), cert_loss, test);
            hist.add_row({tag, std::to_string(j), fmt_double(err)});
            sum += err;
        }
        const double mean = sum / bcfg.n_models;
        summary.add_row({tag, headline.variant, fmt_double(headline.rhs),
                         fmt_double(headline.conservative_rhs), fmt_double(mean),
                         std::to_string(bcfg.n_models)});
        log << tag << ": " << headline.variant << " rhs " << fmt_double(headline.rhs)
            << ", mean test error " << fmt_double(mean) << "\n";
        stream += 2;
    }

    hist.write(out + "/histogram.csv");
    summary.write(out + "/summary.csv");
    return 0;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& log) {
    const std::string out = prepare_out_dir(cfg);
    CsvTable t({"n", "delta", "kernel_mix", "group_order", "model_tag", "variant", "rhs",
                "empirical_term", "complexity_term", "kl", "invariance_defect", "status"});

    const GridAxis ns = make_axis(
        [&] {
            std::vector<double> v;
            for (long n : cfg.get_long_list("sweep.n")) v.push_back(static_cast<double>(n));
            return v;
        }());
    const GridAxis deltas = make_axis(cfg.get_list("sweep.delta"));
    const GridAxis mixes = make_axis(cfg.get_list("sweep.kernel_mix"));
    const GridAxis orders = make_axis(
        [&] {
            std::vector<double> v;
            for (long n : cfg.get_long_list("sweep.group_order"))
                v.push_back(static_cast<double>(n));
            return v;
        }());

    if (!ns.active && !deltas.active && !mixes.active && !orders.active) {
        t.write(out + "/sweep.csv");
        log << "no sweep axes declared; header-only table written\n";
        return 0;
    }

    const std::uint64_t seed = cfg.get_seed("run.seed");
    long point = 0;
    for (double n_ax : ns.values)
        for (double d_ax : deltas.values)
            for (double mix_ax : mixes.values)
                for (double ord_ax : orders.values) {
                    const std::uint64_t pseed = mix_u64(seed, 1000 + static_cast<std::uint64_t>(point));
                    ++point;
                    const std::string n_txt = ns.active ? std::to_string(static_cast<long>(n_ax)) : "";
                    const std::string d_txt = deltas.active ? fmt_double(d_ax) : "";
                    const std::string mix_txt = mixes.active ? fmt_double(mix_ax) : "";
                    const std::string ord_txt =
                        orders.active ? std::to_string(static_cast<long>(ord_ax)) : "";
                    const std::string nan = fmt_double(std::numeric_limits<double>::quiet_NaN());

                    auto error_rows = [&](const std::string& why) {
                        for (const char* tag : {"baseline", "equivariant"})
                            t.add_row({n_txt, d_txt, mix_txt, ord_txt, tag, "", nan, nan, nan, nan,
                                       nan, "error: " + csv_safe(why)});
                    };

                    try {
                        RunConfig point_cfg = cfg;
                        if (orders.active)
                            point_cfg.set("group.order",
                                          std::to_string(static_cast<long>(ord_ax)));
                        if (mixes.active)
                            point_cfg.set("kernel.spec", "mix:" + fmt_double(mix_ax));
                        const GenerativeSpec pspec = scenario_from_config(point_cfg);

                        const long train_n =
                            ns.active ? static_cast<long>(n_ax) : cfg.get_long("scenario.train_n");
                        const double delta = deltas.active ? d_ax : cfg.get_double("bound.delta");
                        if (train_n < 1) throw ConfigError("sweep.n entries must be >= 1");

                        const Dataset train = pspec.sample_dataset(train_n, mix_u64(pseed, 1));
                        const Dataset prior_split =
                            pspec.sample_dataset(cfg.get_long("scenario.prior_n"), mix_u64(pseed, 2));

                        const LossFn cert_loss =
                            loss_from_config(point_cfg, "bound.loss", pspec.certificate_loss());
                        BoundConfig bcfg = bound_config(point_cfg, pseed);
                        bcfg.delta = delta;
                        OptimizerConfig ocfg = optimizer_config(point_cfg, pspec);
                        ocfg.delta = delta;
                        const double sigma = cfg.get_double("bound.prior_sigma");
                        const double defect = max_invariance_defect(pspec);

                        const PredictorFamily base = family_from_config(point_cfg, pspec);
                        const PredictorFamily equi = pspec.equivariant_family(base);
                        const std::pair<const char*, const PredictorFamily*> models[] = {
                            {"baseline", &base}, {"equivariant", &equi}};
                        std::uint64_t stream = 10;
                        std::ostringstream devnull;
                        for (const auto& [tag, fam] : models) {
                            const TrainedModel m = train_model(tag, *fam, train, prior_split,
                                                               sigma, ocfg, pseed, stream, devnull);
                            stream += 2;
                            BoundReport rep;
                            std::string status = "ok";
                            try {
                                if (std::string(tag) == "baseline") {
                                    rep = mcallester_bound(m.opt.posterior, m.prior.prior, *fam,
                                                           cert_loss, train, bcfg);
                                } else {
                                    const ParameterProjection proj = build_parameter_projection(
                                        *fam, pspec.action(), pspec.kernel(), pspec.resolver());
                                    rep = improved_bound(m.opt.posterior, m.prior.prior, proj,
                                                         *fam, cert_loss, train, bcfg);
                                }
                            } catch (const ClosureNotCertifiedError& e) {
                                t.add_row({n_txt, d_txt, mix_txt, ord_txt, tag, "improved", nan,
                                           nan, nan, nan, fmt_double(defect),
                                           "skipped: " + csv_safe(e.what())});
                                continue;
                            }
                            t.add_row({n_txt, d_txt, mix_txt, ord_txt, tag, rep.variant,
                                       fmt_double(rep.rhs), fmt_double(rep.empirical_term),
                                       fmt_double(rep.complexity_term), fmt_double(rep.kl),
                                       fmt_double(defect), status});
                        }
                    } catch (const std::exception& e) {
                        error_rows(e.what());
                    }
                }

    t.write(out + "/sweep.csv");
    log << "sweep grid of " << point << " points written to " << out << "/sweep.csv\n";
    return 0;
}

int run_guarded(std::ostream& log, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        log << "i/o error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace equicert
