// Scenario runner binding the library to reproducible verification runs.
//
// Subcommands: identities, build, extend, verify, homo, kernel. Each accepts
// a scenario config (--config) or falls back to a built-in default scenario,
// with --dt/--tol overrides. Exit status: 0 all checks passed, 1 a check
// failed, 2 config/usage error, 3 internal error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "convsemi/scenario.hpp"

namespace cs = convsemi;

namespace {

struct CommonOpts {
    std::string config;
    std::string out_dir;
    double dt = 0.0;
    double tol = 0.0;
    bool json = false;
    int depth = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config, "scenario config file (INI-style sections)");
    cmd->add_option("--out", o.out_dir, "output directory for JSON/CSV reports");
    cmd->add_option("--dt", o.dt, "grid step override");
    cmd->add_option("--tol", o.tol, "default tolerance override");
    cmd->add_flag("--json", o.json, "echo the JSON summary to stdout");
    cmd->add_option("--depth", o.depth, "extension ladder depth override");
}

cs::Scenario default_scenario(const std::string& purpose) {
    std::ostringstream cfg;
    if (purpose == "identities") {
        cfg << "[scenario]\nname = identities-default\n"
            << "[grid]\ndt = 1e-3\nhorizon = 2.4\n"
            << "[kernel]\ntype = heaviside\n";
    } else if (purpose == "kernel") {
        cfg << "[scenario]\nname = kernel-default\n"
            << "[grid]\ndt = 1e-2\nhorizon = 40\n"
            << "[kernel]\ntype = heaviside\n";
    } else {
        cfg << "[scenario]\nname = " << purpose << "-default\n"
            << "[grid]\ndt = 2e-3\nhorizon = 4.4\n"
            << "[kernel]\ntype = heaviside\n"
            << "[generator]\ntype = dense\ndim = 2\nentries = 0 0 1 0 0 0 0 0\n"
            << "[family]\ntau = 1.0\ndepth = 3\n";
    }
    std::istringstream in(cfg.str());
    return cs::parse_scenario_stream(in);
}

cs::Scenario load_scenario(const CommonOpts& o, const std::string& purpose) {
    cs::Scenario sc = o.config.empty() ? default_scenario(purpose) : cs::parse_scenario_file(o.config);
    if (o.dt > 0.0) {
        double horizon = sc.grid.horizon();
        sc.grid = cs::Grid(o.dt, static_cast<std::size_t>(std::llround(horizon / o.dt)) + 1);
    }
    if (o.tol > 0.0) sc.default_tol = o.tol;
    if (o.depth > 0) sc.depth = o.depth;
    return sc;
}

void ensure_out_dir(const std::string& dir) {
    if (!dir.empty()) std::filesystem::create_directories(dir);
}

cs::CheckSpec spec_of(const std::string& name, std::map<std::string, std::string> kv = {}) {
    return cs::CheckSpec{name, std::move(kv)};
}

int run_with_checks(cs::Scenario sc, std::vector<cs::CheckSpec> fallback, const CommonOpts& o) {
    if (sc.checks.empty()) sc.checks = std::move(fallback);
    ensure_out_dir(o.out_dir);
    return cs::run_scenario(sc, o.out_dir, o.json, std::cout);
}

int cmd_identities(const CommonOpts& o, bool with_kunstmann) {
    cs::Scenario sc = load_scenario(o, "identities");
    std::vector<cs::CheckSpec> suite{
        spec_of("lemma21", {{"name", "lemma21"}, {"t", "2"}, {"tau", "1"}, {"tol", "1e-12"}}),
        spec_of("coro22", {{"name", "coro22"}, {"alpha", "2"}, {"t", "2"}, {"tau", "0.7"}}),
        spec_of("coro23", {{"name", "coro23"}, {"s", "1"}, {"u", "0.8"}}),
        spec_of("thm25", {{"name", "thm25"}, {"t", "0.4"}, {"s", "0.3"}}),
    };
    if (with_kunstmann)
        suite.push_back(spec_of(
            "kunstmann",
            {{"name", "kunstmann"}, {"n", "1"}, {"t", "1"}, {"s", "1"}, {"x", "1"}, {"tol", "1e-6"}}));
    return run_with_checks(std::move(sc), std::move(suite), o);
}

int cmd_build(const CommonOpts& o) {
    cs::Scenario sc = load_scenario(o, "build");
    if (!sc.gen) throw cs::ScenarioParseError("build: requires a [generator] section");
    if (!(sc.tau > 0.0)) throw cs::ScenarioParseError("build: requires [family] tau");
    ensure_out_dir(o.out_dir);
    cs::ConvolutedFamily fam = cs::build_convoluted(*sc.gen, sc.kernel, sc.tau, sc.grid);
    std::string dir = o.out_dir.empty() ? "." : o.out_dir;
    cs::write_family_csv(fam, dir + "/" + sc.name + "_family.csv");
    nlohmann::json j{{"scenario", sc.name},
                     {"kernel", sc.kernel.tag()},
                     {"power", fam.power},
                     {"tau", fam.tau},
                     {"build_path", fam.build_path},
                     {"continuity_modulus", fam.continuity_modulus()},
                     {"nondegeneracy_smin", fam.nondegeneracy_smin()},
                     {"grid", {{"dt", sc.grid.dt}, {"n", sc.grid.n_points}}}};
    std::ofstream out(dir + "/" + sc.name + "_family.json", std::ios::binary);
    out << j.dump(2) << '\n';
    if (o.json) std::cout << j.dump(2) << "\n";
    std::cout << "family written to " << dir << "/" << sc.name << "_family.csv\n";
    return 0;
}

int cmd_extend(const CommonOpts& o) {
    cs::Scenario sc = load_scenario(o, "extend");
    if (!sc.gen) throw cs::ScenarioParseError("extend: requires a [generator] section");
    if (!(sc.tau > 0.0)) throw cs::ScenarioParseError("extend: requires [family] tau");
    ensure_out_dir(o.out_dir);
    cs::ConvolutedFamily base = cs::build_convoluted(*sc.gen, sc.kernel, sc.tau, sc.grid);
    cs::ExtensionLadder lad = cs::extend_family(base, std::max(2, sc.depth));
    std::string dir = o.out_dir.empty() ? "." : o.out_dir;
    nlohmann::json levels = nlohmann::json::array();
    for (int n = 1; n <= lad.depth(); ++n) {
        const auto& lvl = lad.level(n);
        cs::write_family_csv(lvl, dir + "/" + sc.name + "_level" + std::to_string(n) + ".csv");
        levels.push_back({{"power", lvl.power},
                          {"tau", lvl.tau},
                          {"seam_gaps", lvl.seam_gaps},
                          {"continuity_modulus", lvl.continuity_modulus()}});
    }
    nlohmann::json j{{"scenario", sc.name},
                     {"kernel", sc.kernel.tag()},
                     {"kappa", lad.kappa},
                     {"levels", levels}};
    std::ofstream out(dir + "/" + sc.name + "_ladder.json", std::ios::binary);
    out << j.dump(2) << '\n';
    if (o.json) std::cout << j.dump(2) << "\n";
    std::cout << "ladder of depth " << lad.depth() << " written under " << dir << "\n";
    return 0;
}

int cmd_verify(const CommonOpts& o) {
    cs::Scenario sc = load_scenario(o, "verify");
    std::vector<cs::CheckSpec> suite{
        spec_of("composition", {{"name", "composition"}}),
        spec_of("generator", {{"name", "generator"}}),
        spec_of("splitting", {{"name", "splitting"}}),
        spec_of("seam_gap", {{"name", "seam_gap"}, {"tol", "1e-2"}}),
        spec_of("ivp", {{"name", "ivp"}}),
    };
    if (sc.depth >= 3)
        suite.push_back(spec_of("extension_mid", {{"name", "extension_mid"}, {"n", "3"}, {"j", "1"}}));
    return run_with_checks(std::move(sc), std::move(suite), o);
}

int cmd_homo(const CommonOpts& o) {
    cs::Scenario sc = load_scenario(o, "homo");
    std::vector<cs::CheckSpec> suite{
        spec_of("gk_welldefined", {{"name", "gk_welldefined"}}),
        spec_of("gk_generator_action", {{"name", "gk_generator_action"}}),
        spec_of("gk_multiplicativity", {{"name", "gk_multiplicativity"}}),
        spec_of("kds_nondegeneracy", {{"name", "kds_nondegeneracy"}}),
    };
    if (sc.kernel_l) suite.push_back(spec_of("kl_consistency", {{"name", "kl_consistency"}}));
    cs::Scenario sc_copy = sc;
    int rc = run_with_checks(std::move(sc), std::move(suite), o);
    if (!o.out_dir.empty() && sc_copy.gen && sc_copy.tau > 0.0) {
        // export the materialized G(f) matrix of the default probe
        auto ctx = cs::HomomorphismContext::make(*sc_copy.gen, sc_copy.kernel, sc_copy.tau,
                                                 sc_copy.grid, 2);
        cs::TestFunction h({cs::cx{1.0, 0.0}, cs::cx{0.5, 0.0}}, 0.8 * ctx.kappa());
        cs::DkElement e = cs::make_element(ctx, h, 2);
        cs::write_matrix_csv(cs::gk_matrix(ctx, e),
                             o.out_dir + "/" + sc_copy.name + "_gk_matrix.csv");
    }
    return rc;
}

int cmd_kernel(const CommonOpts& o, const std::vector<double>& lambdas) {
    cs::Scenario sc = load_scenario(o, "kernel");
    std::vector<cs::CheckSpec> suite;
    bool product_kernel = sc.kernel.get_if<cs::GevreyProduct>() || sc.kernel.get_if<cs::BaumerProduct>();
    if (!product_kernel) {
        for (double l : lambdas.empty() ? std::vector<double>{1.0, 4.0} : lambdas)
            suite.push_back(spec_of("laplace_match", {{"name", "laplace_match"},
                                                      {"lambda_re", std::to_string(l)},
                                                      {"tol", "1e-4"}}));
    }
    if (sc.kernel.get_if<cs::GevreyProduct>())
        suite.push_back(spec_of("gevrey_bound", {{"name", "gevrey_bound"}, {"tol", "1e-9"}}));
    if (sc.kernel.get_if<cs::BaumerProduct>())
        suite.push_back(spec_of("baumer_value", {{"name", "baumer_value"},
                                                 {"lambda_re", "1"},
                                                 {"expected", "0"},
                                                 {"tol", "0"}}));
    if (suite.empty()) throw cs::ScenarioParseError("kernel: nothing to diagnose for this kernel");
    return run_with_checks(std::move(sc), std::move(suite), o);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"convoluted-semigroup verification runner"};
    app.require_subcommand(1);

    CommonOpts o_ident, o_build, o_extend, o_verify, o_homo, o_kernel;
    bool with_kunstmann = false;
    std::vector<double> lambdas;

    CLI::App* c_ident = app.add_subcommand("identities", "run the convolution identity suite");
    add_common(c_ident, o_ident);
    c_ident->add_flag("--with-kunstmann", with_kunstmann,
                      "include the scalar-extension remark adjudication (reports a discrepancy)");
    CLI::App* c_build = app.add_subcommand("build", "construct a convoluted family and dump CSV");
    add_common(c_build, o_build);
    CLI::App* c_extend = app.add_subcommand("extend", "extend a family to a ladder of depth n");
    add_common(c_extend, o_extend);
    CLI::App* c_verify = app.add_subcommand("verify", "composition/generator/splitting residuals");
    add_common(c_verify, o_verify);
    CLI::App* c_homo = app.add_subcommand("homo", "test-function homomorphism suite");
    add_common(c_homo, o_homo);
    CLI::App* c_kernel = app.add_subcommand("kernel", "Laplace/product kernel diagnostics");
    add_common(c_kernel, o_kernel);
    c_kernel->add_option("--lambda", lambdas, "Laplace evaluation points (real)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_ident->parsed()) return cmd_identities(o_ident, with_kunstmann);
        if (c_build->parsed()) return cmd_build(o_build);
        if (c_extend->parsed()) return cmd_extend(o_extend);
        if (c_verify->parsed()) return cmd_verify(o_verify);
        if (c_homo->parsed()) return cmd_homo(o_homo);
        if (c_kernel->parsed()) return cmd_kernel(o_kernel, lambdas);
    } catch (const cs::ScenarioParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
