#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "convsemi/convolution.hpp"
#include "convsemi/generator.hpp"
#include "convsemi/identities.hpp"
#include "convsemi/kernel.hpp"
#include "convsemi/quadrature.hpp"
#include "convsemi/report.hpp"

namespace convsemi {

/// int_0^t j_alpha(t-s) e^{a s} ds in closed form: a power series in a*t
/// where it is stable, the integer-order recurrence
/// I_{r+1} = (I_r - t^r/r!)/a otherwise; nullopt when neither applies.
inline std::optional<cx> frac_exp_integral(double alpha, cx a, double t) {
    if (t <= 0.0) return cx{0.0, 0.0};
    cx z = a * t;
    double az = std::abs(z);
    if (az < 1e-300) return cx{std::pow(t, alpha) / std::tgamma(alpha + 1.0), 0.0};
    // series terms reach e^{|z|} while the sum is ~e^{Re z}; cap the
    // cancellation amplification at e^7 to keep ~1e-13 relative accuracy
    if (az <= 30.0 && az - z.real() <= 7.0) {
        cx term = 1.0 / std::tgamma(alpha + 1.0);
        cx acc = term;
        for (int i = 1; i < 400; ++i) {
            term *= z / cx{alpha + i, 0.0};
            acc += term;
            if (std::abs(term) < 1e-18 * std::abs(acc) && i > 4) break;
        }
        return std::pow(t, alpha) * acc;
    }
    if (std::abs(alpha - std::round(alpha)) < 1e-12) {
        int m = static_cast<int>(std::llround(alpha));
        cx I = (std::exp(z) - 1.0) / a;
        double fact = 1.0, tp = 1.0;
        for (int r = 1; r < m; ++r) {
            tp *= t;
            fact *= r;
            I = (I - tp / fact) / a;
        }
        return I;
    }
    return std::nullopt;
}

/// A time-indexed family t -> S(t) of operators on [0, tau], convoluted by
/// k^{*power}, together with the sampled kernel power and its running
/// integral (used by the residual checks). S(0) = 0 always.
struct ConvolutedFamily {
    Kernel base_kernel;
    int power = 1;
    Generator gen;
    Grid grid;
    double tau = 0.0;
    std::size_t i_tau = 0;
    std::vector<MatrixXcd> values;  // indices 0..i_tau
    SampledFn kernel_samples;       // k^{*power} on the full grid
    SampledFn kernel_integral;      // int_0^t k^{*power}
    std::vector<double> seam_gaps;  // branch agreement at t = j*kappa (extended families)
    std::string build_path;

    ConvolutedFamily(Kernel k, int power_, Generator g, Grid grid_, double tau_)
        : base_kernel(std::move(k)), power(power_), gen(std::move(g)), grid(grid_), tau(tau_),
          i_tau(grid_.index_of(tau_)),
          kernel_samples(conv_power(base_kernel, power, grid_)),
          kernel_integral(kernel_cumulative_power(base_kernel, power, grid_)) {}

    static SampledFn kernel_cumulative_power(const Kernel& k, int n, const Grid& g) {
        if (n == 1) return kernel_cumulative(k, g);
        if (auto closed = k.conv_power_closed(n)) {
            SampledFn K = kernel_cumulative(closed->second, g);
            if (closed->first != 1.0) K *= cx{closed->first, 0.0};
            return K;
        }
        return cumulative(conv_power(k, n, g));
    }

    Eigen::Index dim() const { return gen.dim(); }
    const MatrixXcd& at(std::size_t i) const {
        if (i >= values.size()) throw std::domain_error("ConvolutedFamily: index beyond horizon");
        return values[i];
    }
    /// Linear interpolation at off-grid times.
    MatrixXcd at_time(double t) const {
        if (t < 0.0 || t > tau + 0.5 * grid.dt)
            throw std::domain_error("ConvolutedFamily: time outside [0, tau]");
        double ir = t / grid.dt;
        auto lo = static_cast<std::size_t>(ir);
        if (lo >= i_tau) return values[i_tau];
        double w = ir - static_cast<double>(lo);
        if (w == 0.0) return values[lo];
        return (1.0 - w) * values[lo] + w * values[lo + 1];
    }

    VectorXcd apply(std::size_t i, const VectorXcd& x) const { return at(i) * x; }

    /// Largest jump between adjacent samples (strong-continuity smoke check).
    double continuity_modulus() const {
        double worst = 0.0;
        for (std::size_t i = 0; i + 1 < values.size(); ++i)
            worst = std::max(worst, (values[i + 1] - values[i]).cwiseAbs().maxCoeff());
        return worst;
    }

    /// Smallest singular value of the stacked family [S(t_1); ...; S(t_J)]
    /// over an index sample (positive iff the family is non-degenerate on
    /// the truncated space).
    double nondegeneracy_smin(int samples = 8) const {
        int J = std::min<int>(samples, static_cast<int>(i_tau));
        MatrixXcd stack(J * dim(), dim());
        for (int j = 0; j < J; ++j) {
            std::size_t idx = 1 + static_cast<std::size_t>((static_cast<double>(j) / J) * (i_tau - 1));
            stack.block(j * dim(), 0, dim(), dim()) = values[idx];
        }
        Eigen::JacobiSVD<MatrixXcd> svd(stack);
        return svd.singularValues().minCoeff();
    }
};

namespace detail {

// int over u in [m_lo dt, m_hi dt] of k(u) V(t_q - u) du with V piecewise
// linear on the grid, from the kernel cell moments.
template <typename T>
T moment_partial(const CellMoments& cm, const std::vector<T>& V, std::size_t q, std::size_t m_lo,
                 std::size_t m_hi, const T& zero) {
    T acc = zero;
    for (std::size_t m = m_lo; m < m_hi; ++m)
        acc += (cm.M0[m] - cm.M1[m]) * V[q - m] + cm.M1[m] * V[q - m - 1];
    return acc;
}

// Simpson integral of w(r) = kv[q - r] * V[r] over node range [r0, r1].
template <typename T>
T simpson_product(const std::vector<cx>& kv, const std::vector<T>& V, std::size_t q, std::size_t r0,
                  std::size_t r1, double dt, const T& zero) {
    if (r1 <= r0) return zero;
    auto w = simpson_weights(r1 - r0);
    T acc = zero;
    for (std::size_t r = r0; r <= r1; ++r) acc += (w[r - r0] * kv[q - r]) * V[r];
    return dt * acc;
}

}  // namespace detail

/// Duhamel construction S_k(t) = int_0^t k(t-s) e^{sA} ds. Dense generators
/// go through the kernel product rule against sampled matrix exponentials;
/// diagonal generators use the componentwise closed form when the kernel is
/// a fractional power (exact), falling back to componentwise quadrature.
inline ConvolutedFamily build_convoluted(const Generator& A, const Kernel& k, double tau,
                                         const Grid& grid) {
    ConvolutedFamily fam(k, 1, A, grid, tau);
    std::size_t n = fam.i_tau + 1;
    Eigen::Index d = A.dim();
    fam.values.assign(n, MatrixXcd::Zero(d, d));

    if (A.is_diagonal()) {
        VectorXcd a = A.eigenvalues();
        std::optional<double> alpha = fractional_order(k);
        bool closed_ok = alpha.has_value();
        if (closed_ok) {
            for (std::size_t i = 1; i < n && closed_ok; ++i)
                for (Eigen::Index m = 0; m < d; ++m) {
                    auto v = frac_exp_integral(*alpha, a[m], grid.t(i));
                    if (!v) {
                        closed_ok = false;
                        break;
                    }
                    fam.values[i](m, m) = *v;
                }
        }
        if (closed_ok && alpha) {
            fam.build_path = "diagonal_closed_form";
            return fam;
        }
        KernelRule rule = make_kernel_rule(k, grid);
        for (Eigen::Index m = 0; m < d; ++m) {
            std::vector<cx> em(n);
            for (std::size_t i = 0; i < n; ++i) em[i] = std::exp(a[m] * grid.t(i));
            for (std::size_t i = 1; i < n; ++i) fam.values[i](m, m) = rule.conv_at(em, i);
        }
        fam.build_path = "diagonal_quadrature";
        return fam;
    }

    KernelRule rule = make_kernel_rule(k, grid);
    std::vector<MatrixXcd> E(n);
    for (std::size_t i = 0; i < n; ++i) E[i] = A.exp_at(grid.t(i));
    MatrixXcd zero = MatrixXcd::Zero(d, d);
    for (std::size_t i = 1; i < n; ++i) fam.values[i] = rule.conv_at(E, i, zero);
    fam.build_path = "dense_quadrature";
    return fam;
}

/// The canonical scalar family k_t(s) = k(t-s) chi_[0,t](s) for grid times
/// t <= tau (node-aligned jumps halved).
inline std::vector<SampledFn> canonical_family(const Kernel& k, double tau, const Grid& grid) {
    std::size_t i_tau = grid.index_of(tau);
    std::vector<cx> kv = k.sample(grid).values;
    std::vector<SampledFn> fam;
    fam.reserve(i_tau + 1);
    for (std::size_t i = 0; i <= i_tau; ++i) fam.push_back(detail::canonical_slice(kv, grid, i));
    return fam;
}

/// Residual of the regularized initial value problem: rebuilds
/// v(t) = int_0^t e^{(t-s)A} K(s) x ds independently (plain trapezoid against
/// matrix exponentials) and checks v' = Av + K x and S x = v' by second-order
/// differencing.
inline ResidualReport ivp_residual(const ConvolutedFamily& fam, const VectorXcd& x, double tol) {
    const Grid& g = fam.grid;
    std::size_t n = fam.i_tau + 1;
    Eigen::Index d = fam.dim();
    if (x.size() != d) throw std::invalid_argument("ivp_residual: dimension mismatch");

    std::vector<MatrixXcd> E(n);
    for (std::size_t i = 0; i < n; ++i) E[i] = fam.gen.exp_at(g.t(i));
    std::vector<VectorXcd> Kx(n);
    for (std::size_t i = 0; i < n; ++i) Kx[i] = fam.kernel_integral[i] * x;

    std::vector<VectorXcd> v(n, VectorXcd::Zero(d));
    for (std::size_t i = 1; i < n; ++i) {
        VectorXcd acc = 0.5 * (E[i] * Kx[0] + E[0] * Kx[i]);
        for (std::size_t j = 1; j < i; ++j) acc += E[i - j] * Kx[j];
        v[i] = g.dt * acc;
    }

    // the difference quotients assume v in C^3; for singular kernels v'''
    // blows up like t^{a-5/2} at the origin, so a short burn-in is excluded
    std::size_t i_start = std::max<std::size_t>(1, fam.i_tau / 20);
    double r_ode = 0.0, r_deriv = 0.0;
    for (std::size_t i = i_start; i + 1 < n; ++i) {
        VectorXcd dv = (v[i + 1] - v[i - 1]) / (2.0 * g.dt);
        r_ode = std::max(r_ode, (dv - fam.gen.apply(v[i]) - Kx[i]).cwiseAbs().maxCoeff());
        r_deriv = std::max(r_deriv, (fam.values[i] * x - dv).cwiseAbs().maxCoeff());
    }
    double worst = std::max(r_ode, r_deriv);
    return ResidualReport("ivp", worst, g,
                          {{"r_ode", r_ode}, {"r_derivative", r_deriv}, {"t_start", g.t(i_start)}}, tol);
}

/// Ladder of families S_{k^{*n}} on [0, n kappa] built from a base family by
/// the sharp extension step; kappa = tau - dt (one grid cell inside tau).
struct ExtensionLadder {
    Kernel base;
    Generator gen;
    Grid grid;
    double kappa = 0.0;
    std::size_t i_kappa = 0;
    std::vector<ConvolutedFamily> levels;  // levels[j] has power j+1

    ExtensionLadder(Kernel base_, Generator gen_, Grid grid_, double kappa_, std::size_t i_kappa_)
        : base(std::move(base_)), gen(std::move(gen_)), grid(grid_), kappa(kappa_), i_kappa(i_kappa_) {}

    const ConvolutedFamily& level(int n) const {
        if (n < 1 || n > static_cast<int>(levels.size()))
            throw std::domain_error("ExtensionLadder: level " + std::to_string(n) + " not built");
        return levels[n - 1];
    }
    int depth() const { return static_cast<int>(levels.size()); }
};

namespace detail {

inline CellMoments power_moments(const Kernel& k, int n, const Grid& g) {
    if (n == 1) return kernel_cell_moments(k, g);
    if (auto closed = k.conv_power_closed(n)) return kernel_cell_moments(closed->second, g, closed->first);
    return kernel_cell_moments(Kernel::from_samples(conv_power(k, n, g)), g);
}

// True when k^{*n} has an integrable singularity at 0+.
inline bool power_singular(const Kernel& k, int n) {
    if (auto a0 = fractional_order(k)) return (*a0) * n < 1.0;
    return n == 1 && k.singular_at_zero();
}

// One extension/combination step: from S_{k^{*a}} on [0, a kappa] and
// S_{k^{*b}} on [0, b kappa], build S_{k^{*(a+b)}} on [0, (a+b) kappa]:
// the convolution of k^{*b} against level a up to a kappa, then the
// three-term expression
//   S_a(a kappa) S_b(t - a kappa) + int_0^{a kappa} k^{*b}(t-s) S_a(s) ds
//                                 + int_0^{t-a kappa} k^{*a}(t-s) S_b(s) ds.
// Both branches are evaluated at the seam t = a kappa and the gap recorded.
inline ConvolutedFamily combine_levels(const ExtensionLadder& lad, const ConvolutedFamily& La,
                                       const ConvolutedFamily& Lb) {
    const Grid& g = lad.grid;
    int a = La.power, b = Lb.power;
    std::size_t ia = static_cast<std::size_t>(a) * lad.i_kappa;
    std::size_t i_end = static_cast<std::size_t>(a + b) * lad.i_kappa;
    if (i_end >= g.n_points)
        throw std::domain_error("extend_family: insufficient grid horizon for depth " +
                                std::to_string(a + b));

    ConvolutedFamily out(lad.base, a + b, lad.gen, g, g.t(i_end));
    Eigen::Index d = lad.gen.dim();
    MatrixXcd zero = MatrixXcd::Zero(d, d);
    out.values.assign(i_end + 1, zero);

    CellMoments mom_a = power_moments(lad.base, a, g);
    CellMoments mom_b = power_moments(lad.base, b, g);
    KernelRule rule_b = KernelRule::from_moments(mom_b.M0, mom_b.M1);

    for (std::size_t i = 1; i <= ia; ++i) out.values[i] = rule_b.conv_at(La.values, i, zero);

    for (std::size_t i = ia; i <= i_end; ++i) {
        MatrixXcd three = La.values[ia] * Lb.values[i - ia];
        three += moment_partial(mom_b, La.values, i, i - ia, i, zero);
        if (i > ia) three += moment_partial(mom_a, Lb.values, i, ia, i, zero);
        if (i == ia) {
            out.seam_gaps.push_back((three - out.values[ia]).cwiseAbs().maxCoeff());
        } else {
            out.values[i] = three;
        }
    }
    out.seam_gaps.insert(out.seam_gaps.end(), La.seam_gaps.begin(), La.seam_gaps.end());
    out.build_path = "extension";
    return out;
}

}  // namespace detail

/// Extends a k-family on [0, tau] to the ladder S_{k^{*n}} on [0, n kappa],
/// n = 2..n_target, with kappa = tau - dt.
inline ExtensionLadder extend_family(const ConvolutedFamily& base, int n_target) {
    if (base.power != 1) throw std::invalid_argument("extend_family: base family must have power 1");
    if (n_target < 1) throw std::invalid_argument("extend_family: n_target must be >= 1");
    if (base.i_tau < 2) throw std::domain_error("extend_family: base horizon too short for kappa < tau");

    std::size_t i_kappa = base.i_tau - 1;
    ExtensionLadder lad(base.base_kernel, base.gen, base.grid, base.grid.t(i_kappa), i_kappa);

    ConvolutedFamily L1(base.base_kernel, 1, base.gen, base.grid, lad.kappa);
    L1.values.assign(base.values.begin(), base.values.begin() + lad.i_kappa + 1);
    L1.build_path = base.build_path;
    lad.levels.push_back(std::move(L1));
    for (int n = 2; n <= n_target; ++n)
        lad.levels.push_back(detail::combine_levels(lad, lad.levels.back(), lad.levels.front()));
    return lad;
}

/// Rebuilds S_{k^{*n}} through the intermediate split at level j (the
/// extension expression is not unique) and reports the gap against the
/// ladder's own level n.
inline ResidualReport extend_family_mid(const ExtensionLadder& lad, int j, int n, double tol) {
    if (j < 1 || j > n - 1) throw std::invalid_argument("extend_family_mid: need 1 <= j <= n-1");
    if (n > lad.depth()) throw std::domain_error("extend_family_mid: ladder depth insufficient");
    ConvolutedFamily rebuilt = detail::combine_levels(lad, lad.level(j), lad.level(n - j));
    const ConvolutedFamily& ref = lad.level(n);
    double worst = 0.0;
    for (std::size_t i = 0; i < rebuilt.values.size(); ++i)
        worst = std::max(worst, (rebuilt.values[i] - ref.values[i]).cwiseAbs().maxCoeff());
    double seam = rebuilt.seam_gaps.empty() ? 0.0 : rebuilt.seam_gaps.front();
    return ResidualReport("extension_mid_split", worst, lad.grid,
                          {{"j", double(j)}, {"n", double(n)}, {"seam_gap", seam}}, tol);
}

/// Composition law residual
/// S(t)S(s) = (int_t^{t+s} - int_0^s) k^{*n}(t+s-r) S(r) dr.
/// The near-singular leg uses the kernel moments for singular kernels and
/// composite Simpson otherwise (exact for polynomial families).
inline ResidualReport composition_residual(const ConvolutedFamily& fam, double t, double s, double tol) {
    const Grid& g = fam.grid;
    std::size_t it = g.index_of(t), is = g.index_of(s);
    if (it + is > fam.i_tau) throw std::domain_error("composition_residual: requires t + s < tau");
    std::size_t its = it + is;
    Eigen::Index d = fam.dim();
    MatrixXcd zero = MatrixXcd::Zero(d, d);

    MatrixXcd lhs = fam.values[it] * fam.values[is];
    MatrixXcd I1;
    if (detail::power_singular(fam.base_kernel, fam.power)) {
        CellMoments cm = detail::power_moments(fam.base_kernel, fam.power, g);
        I1 = detail::moment_partial(cm, fam.values, its, std::size_t{0}, is, zero);
    } else {
        I1 = detail::simpson_product(fam.kernel_samples.values, fam.values, its, it, its, g.dt, zero);
    }
    MatrixXcd I2 = detail::simpson_product(fam.kernel_samples.values, fam.values, its, std::size_t{0},
                                           is, g.dt, zero);
    double res = (lhs - (I1 - I2)).cwiseAbs().maxCoeff();
    return ResidualReport("composition", res, g, {{"t", t}, {"s", s}, {"power", double(fam.power)}},
                          tol);
}

/// Defining identity residual A int_0^t S x - S(t) x + K(t) x at one time.
inline ResidualReport generator_residual(const ConvolutedFamily& fam, const VectorXcd& x, double t,
                                         double tol) {
    const Grid& g = fam.grid;
    std::size_t it = g.index_of(t);
    if (it > fam.i_tau) throw std::domain_error("generator_residual: t beyond family horizon");
    std::vector<VectorXcd> Sx(it + 1);
    for (std::size_t i = 0; i <= it; ++i) Sx[i] = fam.values[i] * x;
    VectorXcd integral = VectorXcd::Zero(fam.dim());
    if (it >= 1) {
        auto w = simpson_weights(it);
        for (std::size_t i = 0; i <= it; ++i) integral += w[i] * Sx[i];
        integral *= g.dt;
    }
    VectorXcd r = fam.gen.apply(integral) - Sx[it] + fam.kernel_integral[it] * x;
    double res = r.cwiseAbs().maxCoeff();
    return ResidualReport("generator_identity", res, g, {{"t", t}, {"power", double(fam.power)}}, tol);
}

/// Splitting residual of the depth-2 level:
/// S_{k*k}(t+s) = S_k(t) S_k(s) + (int_0^t + int_0^s) k(t+s-u) S_k(u) du.
inline ResidualReport splitting_residual(const ExtensionLadder& lad, double t, double s, double tol) {
    if (lad.depth() < 2) throw std::domain_error("splitting_residual: ladder depth 2 required");
    const Grid& g = lad.grid;
    const ConvolutedFamily& L1 = lad.level(1);
    const ConvolutedFamily& L2 = lad.level(2);
    std::size_t it = g.index_of(t), is = g.index_of(s);
    if (it >= lad.i_kappa || is >= lad.i_kappa)
        throw std::domain_error("splitting_residual: requires t, s in [0, kappa)");
    std::size_t its = it + is;
    Eigen::Index d = lad.gen.dim();
    MatrixXcd zero = MatrixXcd::Zero(d, d);
    CellMoments cm = kernel_cell_moments(lad.base, g);

    MatrixXcd rhs = L1.values[it] * L1.values[is];
    rhs += detail::moment_partial(cm, L1.values, its, is, its, zero);  // int_0^t k(t+s-u) S(u) du
    rhs += detail::moment_partial(cm, L1.values, its, it, its, zero);  // int_0^s k(t+s-u) S(u) du
    double res = (L2.values[its] - rhs).cwiseAbs().maxCoeff();
    return ResidualReport("splitting", res, g, {{"t", t}, {"s", s}}, tol);
}

/// Deterministic lattice sweep of the composition residual over the valid
/// triangle t, s > 0, t + s < tau.
inline ResidualReport composition_residual_lattice(const ConvolutedFamily& fam, int nt, int ns,
                                                   double tol) {
    double worst = 0.0, worst_t = 0.0, worst_s = 0.0;
    for (int i = 1; i <= nt; ++i)
        for (int j = 1; j <= ns; ++j) {
            std::size_t it = static_cast<std::size_t>(i * fam.i_tau / (nt + 2));
            std::size_t is = static_cast<std::size_t>(j * fam.i_tau / (ns + 2));
            if (it == 0 || is == 0 || it + is > fam.i_tau) continue;
            double t = fam.grid.t(it), s = fam.grid.t(is);
            double r = composition_residual(fam, t, s, tol).max_abs_residual;
            if (r > worst) {
                worst = r;
                worst_t = t;
                worst_s = s;
            }
        }
    return ResidualReport("composition_lattice", worst, fam.grid,
                          {{"nt", double(nt)}, {"ns", double(ns)}, {"worst_t", worst_t}, {"worst_s", worst_s}},
                          tol);
}

/// Lattice sweep of the generator identity over (0, tau].
inline ResidualReport generator_residual_lattice(const ConvolutedFamily& fam, const VectorXcd& x,
                                                 int nt, double tol) {
    double worst = 0.0, worst_t = 0.0;
    for (int i = 1; i <= nt; ++i) {
        std::size_t it = std::max<std::size_t>(1, static_cast<std::size_t>(i * fam.i_tau / nt));
        double t = fam.grid.t(it);
        double r = generator_residual(fam, x, t, tol).max_abs_residual;
        if (r > worst) {
            worst = r;
            worst_t = t;
        }
    }
    return ResidualReport("generator_lattice", worst, fam.grid,
                          {{"nt", double(nt)}, {"worst_t", worst_t}, {"power", double(fam.power)}}, tol);
}

}  // namespace convsemi
