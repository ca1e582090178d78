#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "convsemi/convoluted.hpp"
#include "convsemi/homomorphism.hpp"
#include "convsemi/identities.hpp"
#include "convsemi/kernel.hpp"
#include "convsemi/weyl.hpp"

namespace convsemi {

/// Configuration or validation problem in a scenario file (exit status 2).
struct ScenarioParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace ini {

using Section = std::pair<std::string, std::map<std::string, std::string>>;

/// Flat INI-style parser: named [section] headers, key = value lines,
/// '#' or ';' comments. Sections may repeat (each occurrence kept in order).
inline std::vector<Section> parse(std::istream& in) {
    std::vector<Section> doc;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        auto notspace = [](unsigned char c) { return !std::isspace(c); };
        line.erase(line.begin(), std::find_if(line.begin(), line.end(), notspace));
        line.erase(std::find_if(line.rbegin(), line.rend(), notspace).base(), line.end());
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ScenarioParseError("config line " + std::to_string(lineno) + ": unterminated section");
            doc.emplace_back(line.substr(1, line.size() - 2), std::map<std::string, std::string>{});
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ScenarioParseError("config line " + std::to_string(lineno) + ": expected key = value");
        if (doc.empty())
            throw ScenarioParseError("config line " + std::to_string(lineno) + ": key outside any section");
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        key.erase(std::find_if(key.rbegin(), key.rend(), notspace).base(), key.end());
        val.erase(val.begin(), std::find_if(val.begin(), val.end(), notspace));
        doc.back().second[key] = val;
    }
    return doc;
}

}  // namespace ini

struct CheckSpec {
    std::string name;
    std::map<std::string, std::string> kv;
};

/// A reproducible verification run: grid, kernel, generator, family horizon
/// and an ordered list of checks with tolerances.
struct Scenario {
    std::string name = "unnamed";
    Grid grid{1e-2, 101};
    Kernel kernel = Kernel::heaviside();
    std::optional<Kernel> kernel_l;  // second kernel for k*l consistency checks
    std::optional<Generator> gen;
    double tau = 0.0;  // family horizon (0: no family section)
    int depth = 1;
    double default_tol = 0.0;  // 0: per-check or 10*dt^2
    std::vector<CheckSpec> checks;
};

namespace detail {

inline double to_double(const std::map<std::string, std::string>& kv, const std::string& key,
                        std::optional<double> fallback = std::nullopt) {
    auto it = kv.find(key);
    if (it == kv.end()) {
        if (fallback) return *fallback;
        throw ScenarioParseError("missing required key '" + key + "'");
    }
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ScenarioParseError("key '" + key + "': not a number: '" + it->second + "'");
    }
}

inline std::string to_string_key(const std::map<std::string, std::string>& kv, const std::string& key,
                                 std::optional<std::string> fallback = std::nullopt) {
    auto it = kv.find(key);
    if (it == kv.end()) {
        if (fallback) return *fallback;
        throw ScenarioParseError("missing required key '" + key + "'");
    }
    return it->second;
}

inline std::vector<double> to_doubles(const std::string& s) {
    std::vector<double> out;
    std::istringstream is(s);
    double v;
    while (is >> v) out.push_back(v);
    return out;
}

}  // namespace detail

inline Kernel make_kernel(const std::map<std::string, std::string>& kv) {
    std::string type = detail::to_string_key(kv, "type");
    if (type == "heaviside") return Kernel::heaviside();
    if (type == "fractional") return Kernel::fractional_j(detail::to_double(kv, "alpha"));
    if (type == "indicator01") return Kernel::indicator01();
    if (type == "heat") return Kernel::heat_boundary(detail::to_double(kv, "a"));
    if (type == "gevrey")
        return Kernel::gevrey_product(detail::to_double(kv, "s"), detail::to_double(kv, "l", 1.0),
                                      static_cast<long>(detail::to_double(kv, "trunc", 100000)));
    if (type == "baumer")
        return Kernel::baumer_product(static_cast<long>(detail::to_double(kv, "trunc", 100000)));
    if (type == "expweighted") {
        cx z{detail::to_double(kv, "z_re", 0.0), detail::to_double(kv, "z_im", 0.0)};
        double alpha = detail::to_double(kv, "alpha", 1.0);
        return Kernel::exp_weighted(z, Kernel::fractional_j(alpha));
    }
    throw ScenarioParseError("unknown kernel type '" + type + "'");
}

inline Generator make_generator(const std::map<std::string, std::string>& kv) {
    std::string type = detail::to_string_key(kv, "type");
    if (type == "dense") {
        auto dim = static_cast<Eigen::Index>(detail::to_double(kv, "dim"));
        auto entries = detail::to_doubles(detail::to_string_key(kv, "entries"));
        if (entries.size() != static_cast<std::size_t>(2 * dim * dim))
            throw ScenarioParseError("dense generator: expected " + std::to_string(2 * dim * dim) +
                                     " numbers (row-major re/im pairs)");
        MatrixXcd A(dim, dim);
        for (Eigen::Index r = 0; r < dim; ++r)
            for (Eigen::Index c = 0; c < dim; ++c) {
                std::size_t base = 2 * static_cast<std::size_t>(r * dim + c);
                A(r, c) = cx{entries[base], entries[base + 1]};
            }
        return Generator::dense(std::move(A));
    }
    if (type == "diag") {
        auto entries = detail::to_doubles(detail::to_string_key(kv, "entries"));
        if (entries.empty() || entries.size() % 2 != 0)
            throw ScenarioParseError("diag generator: expected re/im pairs");
        VectorXcd a(entries.size() / 2);
        for (std::size_t i = 0; i + 1 < entries.size(); i += 2)
            a[static_cast<Eigen::Index>(i / 2)] = cx{entries[i], entries[i + 1]};
        return Generator::diagonal(std::move(a));
    }
    if (type == "lsquare")
        return build_lsquare_sequence(detail::to_double(kv, "T"),
                                      static_cast<int>(detail::to_double(kv, "M")));
    if (type == "dirichlet")
        return Generator::dirichlet_spectral(static_cast<int>(detail::to_double(kv, "M")),
                                             static_cast<int>(detail::to_double(kv, "sign", -1.0)));
    throw ScenarioParseError("unknown generator type '" + type + "'");
}

inline const std::vector<std::string>& known_checks() {
    static const std::vector<std::string> ids = {
        "lemma21",        "coro22",        "coro23",
        "thm25",          "kunstmann",     "composition",
        "generator",      "splitting",     "extension_mid",
        "seam_gap",       "ivp",           "laplace_match",
        "laplace_zero",   "gevrey_bound",  "baumer_value",
        "blowup_l2",      "gk_welldefined", "gk_multiplicativity",
        "gk_generator_action", "kl_consistency", "kds_nondegeneracy",
        "wk_roundtrip",   "wk_structure"};
    return ids;
}

inline Scenario parse_scenario_stream(std::istream& in) {
    auto doc = ini::parse(in);
    Scenario sc;
    bool have_grid = false;
    for (const auto& [section, kv] : doc) {
        if (section == "scenario") {
            if (auto it = kv.find("name"); it != kv.end()) sc.name = it->second;
            if (auto it = kv.find("tol"); it != kv.end()) sc.default_tol = detail::to_double(kv, "tol");
        } else if (section == "grid") {
            double dt = detail::to_double(kv, "dt");
            double horizon = detail::to_double(kv, "horizon");
            if (!(dt > 0.0) || !(horizon > dt)) throw ScenarioParseError("grid: need dt > 0, horizon > dt");
            sc.grid = Grid(dt, static_cast<std::size_t>(std::llround(horizon / dt)) + 1);
            have_grid = true;
        } else if (section == "kernel") {
            sc.kernel = make_kernel(kv);
        } else if (section == "kernel_l") {
            sc.kernel_l = make_kernel(kv);
        } else if (section == "generator") {
            sc.gen = make_generator(kv);
        } else if (section == "family") {
            sc.tau = detail::to_double(kv, "tau");
            sc.depth = static_cast<int>(detail::to_double(kv, "depth", 1.0));
        } else if (section == "check") {
            CheckSpec spec;
            spec.name = detail::to_string_key(kv, "name");
            bool known = false;
            for (const auto& id : known_checks()) known = known || id == spec.name;
            if (!known) throw ScenarioParseError("unknown check id '" + spec.name + "'");
            spec.kv = kv;
            sc.checks.push_back(std::move(spec));
        } else {
            throw ScenarioParseError("unknown section [" + section + "]");
        }
    }
    if (!have_grid) throw ScenarioParseError("scenario: missing [grid] section");
    for (const auto& c : sc.checks)
        if (auto it = c.kv.find("tol"); it != c.kv.end() && detail::to_double(c.kv, "tol") < 0.0)
            throw ScenarioParseError("check '" + c.name + "': tolerance must be >= 0");
    return sc;
}

inline Scenario parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioParseError("cannot open config file '" + path + "'");
    return parse_scenario_stream(in);
}

/// One executed check: its report plus a grid-length pointwise residual
/// trace (zeros where the check has no pointwise content).
struct CheckResult {
    ResidualReport report;
    std::vector<double> trace;
};

namespace detail {

struct ScenarioState {
    std::optional<ConvolutedFamily> base;
    std::optional<ExtensionLadder> ladder;
    std::optional<HomomorphismContext> homo;

    const ConvolutedFamily& family(const Scenario& sc) {
        if (!base) {
            if (!sc.gen) throw ScenarioParseError("check requires a [generator] section");
            if (!(sc.tau > 0.0)) throw ScenarioParseError("check requires [family] tau");
            base = build_convoluted(*sc.gen, sc.kernel, sc.tau, sc.grid);
        }
        return *base;
    }
    const ExtensionLadder& ext(const Scenario& sc) {
        if (!ladder) ladder = extend_family(family(sc), std::max(2, sc.depth));
        return *ladder;
    }
    const HomomorphismContext& homo_ctx(const Scenario& sc) {
        if (!homo) {
            if (!sc.gen) throw ScenarioParseError("check requires a [generator] section");
            homo = HomomorphismContext::make(*sc.gen, sc.kernel, sc.tau, sc.grid,
                                             std::max(4, sc.depth));
        }
        return *homo;
    }
};

inline VectorXcd ones_vector(Eigen::Index d) {
    VectorXcd x(d);
    x.setOnes();
    return x;
}

inline TestFunction default_bump(double b) {
    return TestFunction({cx{1.0, 0.0}, cx{0.5, 0.0}}, b);
}

}  // namespace detail

/// Executes one check against the scenario's kernel/generator/grid.
inline CheckResult run_check(const Scenario& sc, const CheckSpec& spec, detail::ScenarioState& state) {
    const Grid& g = sc.grid;
    double dt2 = 10.0 * g.dt * g.dt;
    double tol = sc.default_tol > 0.0 ? sc.default_tol : dt2;
    if (auto it = spec.kv.find("tol"); it != spec.kv.end()) tol = detail::to_double(spec.kv, "tol");

    CheckResult out;
    out.trace.assign(g.n_points, 0.0);
    const std::string& id = spec.name;

    auto scalar_trace = [&](const ResidualReport& r, double at_t) {
        out.trace[g.index_of(at_t, 0.5)] = r.max_abs_residual;
    };

    if (id == "lemma21" || id == "coro22" || id == "coro23" || id == "thm25" || id == "kunstmann") {
        IdentityParams p;
        p.f = sc.kernel;
        p.g = sc.kernel_l ? *sc.kernel_l : sc.kernel;
        p.k = sc.kernel;
        p.t = detail::to_double(spec.kv, "t", 0.0);
        p.tau = detail::to_double(spec.kv, "tau", 0.0);
        p.s = detail::to_double(spec.kv, "s", 0.0);
        p.u = detail::to_double(spec.kv, "u", 0.0);
        p.x = detail::to_double(spec.kv, "x", 0.0);
        p.alpha = detail::to_double(spec.kv, "alpha", 1.0);
        p.n = static_cast<int>(detail::to_double(spec.kv, "n", 1.0));
        out.report = check_identity(id, p, g, tol);
        if (id == "thm25") {
            // pointwise trace is recomputed cheaply from the report location
            scalar_trace(out.report, p.t);
        } else if (id == "kunstmann") {
            scalar_trace(out.report, std::min(p.x, g.horizon()));
        } else {
            scalar_trace(out.report, p.t > 0.0 ? p.t : p.s + p.u);
        }
        return out;
    }
    if (id == "composition") {
        const auto& fam = state.family(sc);
        int nt = static_cast<int>(detail::to_double(spec.kv, "nt", 20.0));
        int ns = static_cast<int>(detail::to_double(spec.kv, "ns", 20.0));
        out.report = composition_residual_lattice(fam, nt, ns, tol);
        return out;
    }
    if (id == "generator") {
        const auto& fam = state.family(sc);
        VectorXcd x = detail::ones_vector(fam.dim());
        int nt = static_cast<int>(detail::to_double(spec.kv, "nt", 20.0));
        for (int i = 1; i <= nt; ++i) {
            std::size_t it = std::max<std::size_t>(1, i * fam.i_tau / nt);
            double r = generator_residual(fam, x, g.t(it), tol).max_abs_residual;
            out.trace[it] = r;
        }
        out.report = generator_residual_lattice(fam, x, nt, tol);
        return out;
    }
    if (id == "splitting") {
        const auto& lad = state.ext(sc);
        double t = detail::to_double(spec.kv, "t", 0.6 * lad.kappa);
        double s = detail::to_double(spec.kv, "s", 0.8 * lad.kappa);
        t = g.t(g.index_of(t, 0.5));
        s = g.t(g.index_of(s, 0.5));
        out.report = splitting_residual(lad, t, s, tol);
        scalar_trace(out.report, t + s);
        return out;
    }
    if (id == "extension_mid") {
        const auto& lad = state.ext(sc);
        int n = static_cast<int>(detail::to_double(spec.kv, "n", 3.0));
        int j = static_cast<int>(detail::to_double(spec.kv, "j", 1.0));
        out.report = extend_family_mid(lad, j, n, tol);
        return out;
    }
    if (id == "seam_gap") {
        const auto& lad = state.ext(sc);
        double worst = 0.0;
        for (const auto& lvl : lad.levels)
            for (double s : lvl.seam_gaps) worst = std::max(worst, s);
        out.report = ResidualReport("seam_gap", worst, g, {{"depth", double(lad.depth())}}, tol);
        return out;
    }
    if (id == "ivp") {
        const auto& fam = state.family(sc);
        out.report = ivp_residual(fam, detail::ones_vector(fam.dim()), tol);
        return out;
    }
    if (id == "laplace_match") {
        cx lambda{detail::to_double(spec.kv, "lambda_re", 1.0), detail::to_double(spec.kv, "lambda_im", 0.0)};
        auto analytic = sc.kernel.laplace_analytic(lambda);
        if (!analytic) throw ScenarioParseError("laplace_match: kernel has no closed-form transform");
        cx numeric = laplace_numeric(sc.kernel.sample(g), lambda);
        double res = std::abs(numeric - *analytic);
        out.report = ResidualReport("laplace_match", res, g,
                                    {{"lambda_re", lambda.real()},
                                     {"lambda_im", lambda.imag()},
                                     {"analytic_re", analytic->real()},
                                     {"numeric_re", numeric.real()}},
                                    tol);
        return out;
    }
    if (id == "laplace_zero") {
        cx lambda{detail::to_double(spec.kv, "lambda_re", 1.0), detail::to_double(spec.kv, "lambda_im", 0.0)};
        out.report = laplace_zero_check(sc.kernel, lambda, g, std::nullopt, tol);
        return out;
    }
    if (id == "gevrey_bound") {
        std::vector<cx> pts;
        for (double az : detail::to_doubles(detail::to_string_key(spec.kv, "abs_z", "1 10 100")))
            pts.emplace_back(az, 0.0);
        out.report = gevrey_bound_check(sc.kernel, pts, g, tol);
        return out;
    }
    if (id == "baumer_value") {
        const auto* bp = sc.kernel.get_if<BaumerProduct>();
        if (!bp) throw ScenarioParseError("baumer_value: kernel is not a baumer product");
        cx lambda{detail::to_double(spec.kv, "lambda_re", 1.0), detail::to_double(spec.kv, "lambda_im", 0.0)};
        cx v = baumer_K(lambda, bp->trunc);
        double expected = detail::to_double(spec.kv, "expected", 0.0);
        out.report = ResidualReport("baumer_value", std::abs(v - expected), g,
                                    {{"lambda_re", lambda.real()}, {"value_re", v.real()},
                                     {"value_im", v.imag()}},
                                    tol);
        return out;
    }
    if (id == "blowup_l2") {
        const auto& fam = state.family(sc);
        if (!fam.gen.is_diagonal()) throw ScenarioParseError("blowup_l2: requires a diagonal generator");
        VectorXcd a = fam.gen.eigenvalues();
        double t_max = detail::to_double(spec.kv, "t_max", 0.9);
        double worst = 0.0;
        for (std::size_t i = 1; i <= fam.i_tau; ++i) {
            double t = g.t(i);
            if (t > t_max) break;
            for (Eigen::Index m = 0; m < a.size(); ++m) {
                cx exact = (std::exp(a[m] * t) - 1.0) / a[m];
                double err = std::abs(fam.values[i](m, m) - exact);
                worst = std::max(worst, err);
                out.trace[i] = std::max(out.trace[i], err);
            }
        }
        out.report = ResidualReport("blowup_l2", worst, g, {{"t_max", t_max}}, tol);
        return out;
    }
    if (id == "gk_welldefined" || id == "gk_multiplicativity" || id == "gk_generator_action") {
        const auto& ctx = state.homo_ctx(sc);
        double b = detail::to_double(spec.kv, "b", 0.8 * ctx.kappa());
        int depth = static_cast<int>(detail::to_double(spec.kv, "witness_depth", 2.0));
        TestFunction h = spec.kv.count("f") ? TestFunction::parse(spec.kv.at("f"))
                                            : detail::default_bump(b);
        DkElement e = make_element(ctx, h, depth);
        VectorXcd x = detail::ones_vector(ctx.gen.dim());
        if (id == "gk_welldefined") out.report = gk_welldefinedness_residual(ctx, e, x, tol);
        else if (id == "gk_generator_action") out.report = gk_generator_action_residual(ctx, e, x, tol);
        else out.report = gk_multiplicativity_residual(ctx, e, e, x, tol);
        return out;
    }
    if (id == "kl_consistency") {
        if (!sc.kernel_l) throw ScenarioParseError("kl_consistency: requires a [kernel_l] section");
        const auto& ctx_k = state.homo_ctx(sc);
        Kernel kl = convolve_kernels(sc.kernel, *sc.kernel_l, g);
        HomomorphismContext ctx_kl =
            HomomorphismContext::make(*sc.gen, kl, sc.tau, g, std::max(2, sc.depth));
        double b = detail::to_double(spec.kv, "b", 0.8 * ctx_k.kappa());
        int depth = static_cast<int>(detail::to_double(spec.kv, "witness_depth", 2.0));
        VectorXcd x = detail::ones_vector(ctx_k.gen.dim());
        out.report =
            kl_consistency_residual(ctx_k, ctx_kl, *sc.kernel_l, detail::default_bump(b), depth, x, tol);
        return out;
    }
    if (id == "kds_nondegeneracy") {
        const auto& ctx = state.homo_ctx(sc);
        int n_probes = static_cast<int>(detail::to_double(spec.kv, "probes", 3.0));
        std::vector<DkElement> probes;
        for (int i = 0; i < n_probes; ++i) {
            double b = ctx.kappa() * (0.5 + 0.4 * i / std::max(1, n_probes - 1));
            probes.push_back(make_element(ctx, detail::default_bump(b), 2));
        }
        out.report = kds_nondegeneracy_check(ctx, probes);
        return out;
    }
    if (id == "wk_roundtrip") {
        double b = detail::to_double(spec.kv, "b", 0.8 * g.horizon());
        TestFunction h = detail::default_bump(b);
        SampledFn f = apply_Tk(sc.kernel, h, g);
        SampledFn w = solve_Wk(sc.kernel, f);
        double res = max_abs_diff(w, h.sample(g));
        for (std::size_t i = 0; i < g.n_points; ++i) out.trace[i] = std::abs(w[i] - h.value(g.t(i)));
        out.report = ResidualReport("wk_roundtrip", res, g, {{"b", b}}, tol);
        return out;
    }
    if (id == "wk_structure") {
        double b = detail::to_double(spec.kv, "b", 0.8 * g.horizon());
        Kernel l = sc.kernel_l ? *sc.kernel_l : Kernel::heaviside();
        int n = static_cast<int>(detail::to_double(spec.kv, "n", 3.0));
        int m = static_cast<int>(detail::to_double(spec.kv, "m", 1.0));
        out.report = wk_structure_check(sc.kernel, l, detail::default_bump(b), g, n, m, tol);
        return out;
    }
    throw ScenarioParseError("unknown check id '" + id + "'");
}

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Writes a sampled function as CSV (t, re, im), 17 significant digits, LF.
inline void write_sampled_csv(const SampledFn& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_report: unwritable path '" + path + "'");
    out << "t,re,im\n";
    for (std::size_t i = 0; i < f.size(); ++i)
        out << detail::fmt17(f.grid.t(i)) << ',' << detail::fmt17(f[i].real()) << ','
            << detail::fmt17(f[i].imag()) << '\n';
}

/// Writes a dense matrix as CSV: one line per row, re/im column pairs.
inline void write_matrix_csv(const MatrixXcd& M, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_report: unwritable path '" + path + "'");
    for (Eigen::Index c = 0; c < M.cols(); ++c) out << (c ? "," : "") << "re_" << c << ",im_" << c;
    out << '\n';
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        for (Eigen::Index c = 0; c < M.cols(); ++c)
            out << (c ? "," : "") << detail::fmt17(M(r, c).real()) << ',' << detail::fmt17(M(r, c).imag());
        out << '\n';
    }
}

/// Writes a family as CSV: t then row-major re/im entry columns.
inline void write_family_csv(const ConvolutedFamily& fam, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_report: unwritable path '" + path + "'");
    Eigen::Index d = fam.dim();
    out << "t";
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c) out << ",re_" << r << c << ",im_" << r << c;
    out << '\n';
    for (std::size_t i = 0; i < fam.values.size(); ++i) {
        out << detail::fmt17(fam.grid.t(i));
        for (Eigen::Index r = 0; r < d; ++r)
            for (Eigen::Index c = 0; c < d; ++c)
                out << ',' << detail::fmt17(fam.values[i](r, c).real()) << ','
                    << detail::fmt17(fam.values[i](r, c).imag());
        out << '\n';
    }
}

/// Runs all configured checks, writes the JSON summary and one CSV residual
/// trace per check. Returns the process exit status: 0 all passed, 1 any
/// check failed, 2 parse/config error, 3 internal error (thrown upward).
inline int run_scenario(const Scenario& sc, const std::string& out_dir, bool json_to_stdout,
                        std::ostream& log) {
    auto t0 = std::chrono::steady_clock::now();
    detail::ScenarioState state;
    nlohmann::json checks_json = nlohmann::json::array();
    bool all_passed = true;

    for (std::size_t idx = 0; idx < sc.checks.size(); ++idx) {
        CheckResult res = run_check(sc, sc.checks[idx], state);
        all_passed = all_passed && res.report.passed;
        checks_json.push_back(to_json(res.report));
        log << (res.report.passed ? "[PASS] " : "[FAIL] ") << res.report.name
            << "  max_abs_residual=" << res.report.max_abs_residual
            << " tol=" << res.report.tolerance_used << "\n";
        if (!out_dir.empty()) {
            std::string path = out_dir + "/" + sc.name + "_" + std::to_string(idx) + "_" +
                               res.report.name + ".csv";
            std::ofstream out(path, std::ios::binary);
            if (!out) throw std::runtime_error("emit_report: unwritable path '" + path + "'");
            out << "t,residual\n";
            for (std::size_t i = 0; i < res.trace.size(); ++i)
                out << detail::fmt17(sc.grid.t(i)) << ',' << detail::fmt17(res.trace[i]) << '\n';
        }
    }

    auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
    nlohmann::json summary{{"scenario", sc.name},
                           {"checks", checks_json},
                           {"wall_ms", static_cast<double>(wall_ms)}};
    if (!out_dir.empty()) {
        std::string path = out_dir + "/" + sc.name + ".json";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("emit_report: unwritable path '" + path + "'");
        out << summary.dump(2) << '\n';
    }
    if (json_to_stdout) log << summary.dump(2) << "\n";
    return all_passed ? 0 : 1;
}

}  // namespace convsemi
