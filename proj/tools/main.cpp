#include "equicert/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"PAC-Bayes certificates for group-averaged predictors"};
    app.require_subcommand(1);

    std::string config_path;
    std::string seed_text;
    std::string out_dir;
    std::string projection = "averaging";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key=value configuration file");
        sub->add_option("--seed", seed_text, "override run.seed");
        sub->add_option("--out", out_dir, "override run.out_dir");
    };

    CLI::App* kl = app.add_subcommand(
        "kl-demo", "two-Gaussian divergence split through an averaging projection");
    add_common(kl);
    kl->add_option("--projection", projection, "averaging | identity | skew");

    CLI::App* axioms =
        app.add_subcommand("axioms-check", "property suites for the configured scenario");
    add_common(axioms);

    CLI::App* gen = app.add_subcommand("gen-data", "sample train/val/prior/representative splits");
    add_common(gen);

    CLI::App* certify =
        app.add_subcommand("certify", "train posteriors and emit all certificate variants");
    add_common(certify);

    CLI::App* compare = app.add_subcommand(
        "compare", "baseline vs equivariant: posterior test-error histogram and bound summary");
    add_common(compare);

    CLI::App* sweep = app.add_subcommand("sweep", "certificate grid over declared axes");
    add_common(sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage problems map to the config exit code
    }

    return equicert::run_guarded(std::cout, [&]() -> int {
        equicert::RunConfig cfg = config_path.empty()
                                      ? equicert::RunConfig()
                                      : equicert::RunConfig::parse_file(config_path);
        if (!seed_text.empty()) cfg.set("run.seed", seed_text);
        if (!out_dir.empty()) cfg.set("run.out_dir", out_dir);

        if (kl->parsed()) return equicert::cmd_kl_demo(cfg, projection, std::cout);
        if (axioms->parsed()) return equicert::cmd_axioms_check(cfg, std::cout);
        if (gen->parsed()) return equicert::cmd_gen_data(cfg, std::cout);
        if (certify->parsed()) return equicert::cmd_certify(cfg, std::cout);
        if (compare->parsed()) return equicert::cmd_compare(cfg, std::cout);
        if (sweep->parsed()) return equicert::cmd_sweep(cfg, std::cout);
        return 2;
    });
}
