#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "convsemi/convoluted.hpp"
#include "convsemi/weyl.hpp"

namespace convsemi {

/// Kernel, generator, base family and extension ladder shared by the
/// homomorphism checks. Immutable after construction.
struct HomomorphismContext {
    Kernel k;
    Generator gen;
    Grid grid;
    double tau;
    ExtensionLadder ladder;

    static HomomorphismContext make(const Generator& A, const Kernel& k, double tau, const Grid& grid,
                                    int depth) {
        ConvolutedFamily base = build_convoluted(A, k, tau, grid);
        ExtensionLadder lad = extend_family(base, depth);
        return HomomorphismContext{k, A, grid, tau, std::move(lad)};
    }

    double kappa() const { return ladder.kappa; }
    const ConvolutedFamily& level(int n) const { return ladder.level(n); }
};

/// A test function carried with its constructive membership witness:
/// f = T'_{k^{*depth}} h for a closed-form h, so W_{k^{*n}} f is available
/// exactly (by dual convolution) for every n <= depth. The depth field is
/// the verified ladder depth, not a claim about the full intersection space.
struct DkElement {
    TestFunction base;
    int depth;
    SampledFn f;
};

inline DkElement make_element(const HomomorphismContext& ctx, const TestFunction& h, int depth) {
    if (depth < 1) throw std::invalid_argument("make_element: depth must be >= 1");
    return DkElement{h, depth, apply_Tk_power(ctx.k, depth, h.sample(ctx.grid))};
}

/// Smallest ladder level whose horizon n*kappa covers supp f.
inline int min_depth(const HomomorphismContext& ctx, const DkElement& e) {
    return std::max(1, static_cast<int>(std::ceil(e.base.support_end() / ctx.kappa() - 1e-9)));
}

/// W_{k^{*n}} of the element's deriv-th derivative, from the witness chain:
/// W_{k^{*n}} f^{(d)} = k^{*(depth-n)} o h^{(d)}.
inline SampledFn element_witness(const HomomorphismContext& ctx, const DkElement& e, int n,
                                 int deriv = 0) {
    if (n < 1 || n > e.depth)
        throw std::domain_error("element_witness: no constructive witness at depth " + std::to_string(n));
    SampledFn hd = e.base.sample(ctx.grid, deriv);
    if (n == e.depth) return hd;
    return apply_Tk_power(ctx.k, e.depth - n, hd);
}

namespace detail {

inline VectorXcd weighted_family_integral(const ConvolutedFamily& fam, const SampledFn& w,
                                          const VectorXcd& x, std::size_t i_end) {
    VectorXcd acc = VectorXcd::Zero(fam.dim());
    for (std::size_t i = 0; i <= i_end; ++i) {
        double tw = (i == 0 || i == i_end) ? 0.5 : 1.0;
        acc += (tw * w[i]) * (fam.values[i] * x);
    }
    return fam.grid.dt * acc;
}

inline MatrixXcd weighted_family_matrix(const ConvolutedFamily& fam, const SampledFn& w,
                                        std::size_t i_end) {
    MatrixXcd acc = MatrixXcd::Zero(fam.dim(), fam.dim());
    for (std::size_t i = 0; i <= i_end; ++i) {
        double tw = (i == 0 || i == i_end) ? 0.5 : 1.0;
        acc += (tw * w[i]) * fam.values[i];
    }
    return fam.grid.dt * acc;
}

}  // namespace detail

/// G_k(f) x = int_0^{n kappa} W_{k^{*n}} f(t) S_{k^{*n}}(t) x dt at ladder
/// level n (default: the smallest level covering supp f).
inline VectorXcd gk_apply(const HomomorphismContext& ctx, const DkElement& e, const VectorXcd& x,
                          std::optional<int> level = std::nullopt) {
    int n = level ? *level : min_depth(ctx, e);
    if (n > ctx.ladder.depth())
        throw std::domain_error("gk_apply: support exceeds available ladder (need level " +
                                std::to_string(n) + ")");
    if (e.base.support_end() > n * ctx.kappa() + 1e-12)
        throw std::domain_error("gk_apply: supp f exceeds the level horizon");
    const ConvolutedFamily& fam = ctx.level(n);
    SampledFn w = element_witness(ctx, e, n);
    return detail::weighted_family_integral(fam, w, x, fam.i_tau);
}

/// G_k(f) materialized as a dense matrix (integral of w(t) S(t)).
inline MatrixXcd gk_matrix(const HomomorphismContext& ctx, const DkElement& e,
                           std::optional<int> level = std::nullopt) {
    int n = level ? *level : min_depth(ctx, e);
    if (n > ctx.ladder.depth()) throw std::domain_error("gk_matrix: support exceeds available ladder");
    const ConvolutedFamily& fam = ctx.level(n);
    SampledFn w = element_witness(ctx, e, n);
    return detail::weighted_family_matrix(fam, w, fam.i_tau);
}

/// Level-n vs level-(n+1) agreement of G_k(f) x.
inline ResidualReport gk_welldefinedness_residual(const HomomorphismContext& ctx, const DkElement& e,
                                                  const VectorXcd& x, double tol) {
    int n = min_depth(ctx, e);
    VectorXcd v1 = gk_apply(ctx, e, x, n);
    VectorXcd v2 = gk_apply(ctx, e, x, n + 1);
    double res = (v1 - v2).cwiseAbs().maxCoeff();
    return ResidualReport("gk_welldefined", res, ctx.grid, {{"n", double(n)}}, tol);
}

/// Multiplicativity residual ||G(f*g)x - G(f)G(g)x||_inf. The witness of
/// f*g at depth 2n comes from the convolution derivative identity
///   D^m(f*g) = sum_{i<m} f^(i)(0) g^(m-1-i) + f^(m) * g
/// when k^{*2n} is an integer fractional power j_m (all derivatives exact
/// through the witness chains); otherwise the backward solver is used.
inline ResidualReport gk_multiplicativity_residual(const HomomorphismContext& ctx, const DkElement& fe,
                                                   const DkElement& ge, const VectorXcd& x, double tol) {
    int n = std::max(min_depth(ctx, fe), min_depth(ctx, ge));
    int n2 = 2 * n;
    if (n2 > ctx.ladder.depth())
        throw std::domain_error("gk_multiplicativity: ladder depth " + std::to_string(n2) + " required");
    const Grid& g = ctx.grid;
    const ConvolutedFamily& fam2 = ctx.level(n2);

    SampledFn fg = convolve(fe.f, ge.f);
    std::optional<double> a0 = fractional_order(ctx.k);
    SampledFn w = SampledFn::zero(g);
    bool integer_route = a0 && detail::near_integer(*a0 * n2);
    if (integer_route) {
        int m = static_cast<int>(std::llround(*a0 * n2));
        std::vector<cx> acc(g.n_points, cx{0.0, 0.0});
        // cross terms f^(i)(0) g^(m-1-i)
        for (int i = 0; i < m; ++i) {
            cx f0 = apply_Tk_power(ctx.k, fe.depth, fe.base.sample(g, i))[0];
            if (f0 == cx{0.0, 0.0}) continue;
            SampledFn gd = apply_Tk_power(ctx.k, ge.depth, ge.base.sample(g, m - 1 - i));
            for (std::size_t t = 0; t < g.n_points; ++t) acc[t] += f0 * gd[t];
        }
        SampledFn fm = apply_Tk_power(ctx.k, fe.depth, fe.base.sample(g, m));
        SampledFn conv_term = convolve(fm, ge.f);
        for (std::size_t t = 0; t < g.n_points; ++t) {
            acc[t] += conv_term[t];
            if (m % 2 == 1) acc[t] = -acc[t];
        }
        w = SampledFn(g, std::move(acc), std::min(g.horizon(), *fe.f.support_end + *ge.f.support_end));
    } else {
        w = solve_Wk(power_kernel(ctx.k, n2, g), fg);
    }

    VectorXcd lhs = detail::weighted_family_integral(fam2, w, x, fam2.i_tau);
    VectorXcd rhs = gk_apply(ctx, fe, gk_apply(ctx, ge, x, n), n);
    double res = (lhs - rhs).cwiseAbs().maxCoeff();
    return ResidualReport("gk_multiplicativity", res, g,
                          {{"n", double(n)}, {"integer_route", integer_route ? 1.0 : 0.0}}, tol);
}

/// Generator action residual ||A G(f)x + G(f')x + f(0)x||_inf.
inline ResidualReport gk_generator_action_residual(const HomomorphismContext& ctx, const DkElement& e,
                                                   const VectorXcd& x, double tol) {
    int n = min_depth(ctx, e);
    if (n > ctx.ladder.depth()) throw std::domain_error("gk_generator_action: ladder too shallow");
    const ConvolutedFamily& fam = ctx.level(n);
    VectorXcd Gf = gk_apply(ctx, e, x, n);
    SampledFn w1 = element_witness(ctx, e, n, 1);  // W_{k^{*n}} f'
    VectorXcd Gfp = detail::weighted_family_integral(fam, w1, x, fam.i_tau);
    cx f0 = e.f[0];
    VectorXcd r = ctx.gen.apply(Gf) + Gfp + f0 * x;
    double res = r.cwiseAbs().maxCoeff();
    return ResidualReport("gk_generator_action", res, ctx.grid,
                          {{"n", double(n)}, {"f0_re", f0.real()}}, tol);
}

/// Consistency G_{k*l}(f) = G_k(f) for f constructively in the (k*l)-ladder:
/// f = T'_{(k*l)^{*N}} h, whose k-ladder witness at level n is
/// k^{*(N-n)} o l^{*N} o h.
inline ResidualReport kl_consistency_residual(const HomomorphismContext& ctx_k,
                                              const HomomorphismContext& ctx_kl, const Kernel& l,
                                              const TestFunction& h, int depth, const VectorXcd& x,
                                              double tol) {
    if (!ctx_k.gen.same_operator(ctx_kl.gen))
        throw std::invalid_argument("kl_consistency: mismatched generators");
    const Grid& g = ctx_k.grid;

    DkElement fe_kl = make_element(ctx_kl, h, depth);
    VectorXcd v_kl = gk_apply(ctx_kl, fe_kl, x);

    int n = std::max(1, static_cast<int>(std::ceil(h.support_end() / ctx_k.kappa() - 1e-9)));
    if (n > ctx_k.ladder.depth() || depth < n)
        throw std::domain_error("kl_consistency: insufficient ladder depth or witness depth");
    SampledFn u = apply_Tk_power(l, depth, h.sample(g));
    SampledFn w = (n == depth) ? u : apply_Tk_power(ctx_k.k, depth - n, u);
    const ConvolutedFamily& fam = ctx_k.level(n);
    VectorXcd v_k = detail::weighted_family_integral(fam, w, x, fam.i_tau);

    double res = (v_kl - v_k).cwiseAbs().maxCoeff();
    return ResidualReport("kl_consistency", res, g, {{"n", double(n)}, {"depth", double(depth)}}, tol);
}

/// Joint-kernel non-degeneracy: stacks the matrices of G(theta_i) and
/// reports the smallest singular value; positive means trivial joint kernel
/// on the truncated space.
inline ResidualReport kds_nondegeneracy_check(const HomomorphismContext& ctx,
                                              const std::vector<DkElement>& probes, double floor = 1e-12) {
    if (probes.empty()) throw std::invalid_argument("kds_nondegeneracy_check: empty probe list");
    Eigen::Index d = ctx.gen.dim();
    MatrixXcd stack(static_cast<Eigen::Index>(probes.size()) * d, d);
    for (std::size_t i = 0; i < probes.size(); ++i)
        stack.block(static_cast<Eigen::Index>(i) * d, 0, d, d) = gk_matrix(ctx, probes[i]);
    Eigen::JacobiSVD<MatrixXcd> svd(stack);
    double smin = svd.singularValues().minCoeff();
    double res = smin >= floor ? 0.0 : floor - smin;
    return ResidualReport("kds_nondegeneracy", res, ctx.grid,
                          {{"smin", smin}, {"floor", floor}, {"n_probes", double(probes.size())}}, 0.0);
}

/// Computed norm bound of Theorem-style boundedness:
/// ||G(f)x||_2 <= (int |W_{k^{*n}} f|) max_t ||S(t)x||_2. Returns the slack
/// (bound minus the attained norm; nonnegative up to roundoff).
inline double gk_bound_slack(const HomomorphismContext& ctx, const DkElement& e, const VectorXcd& x) {
    int n = min_depth(ctx, e);
    const ConvolutedFamily& fam = ctx.level(n);
    SampledFn w = element_witness(ctx, e, n);
    double wl1 = 0.0, smax = 0.0;
    for (std::size_t i = 0; i <= fam.i_tau; ++i) {
        double tw = (i == 0 || i == fam.i_tau) ? 0.5 : 1.0;
        wl1 += tw * std::abs(w[i]);
        smax = std::max(smax, (fam.values[i] * x).norm());
    }
    wl1 *= ctx.grid.dt;
    return wl1 * smax - gk_apply(ctx, e, x, n).norm();
}

}  // namespace convsemi
