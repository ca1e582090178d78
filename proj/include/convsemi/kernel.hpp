#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "convsemi/convolution.hpp"
#include "convsemi/grid.hpp"
#include "convsemi/quadrature.hpp"
#include "convsemi/report.hpp"

namespace convsemi {

class Kernel;

/// j_alpha(t) = t^(alpha-1) / Gamma(alpha). Integrably singular at 0 for alpha < 1.
struct FractionalJ {
    double alpha;
};

/// chi(t) = 1 (equals j_1).
struct Heaviside {};

/// e^{z t} * inner(t).
struct ExpWeighted {
    cx z;
    std::shared_ptr<const Kernel> inner;
};

/// chi_(0,1): 1 on (0,1), 0 beyond.
struct Indicator01 {};

/// k(t) = e^{-a^2/(4t)} / (2 sqrt(pi t^3)), with Laplace transform e^{-a sqrt(l)}/a.
struct HeatBoundary {
    double a;
};

/// Laplace-side kernel given by 1/P with P(z) = prod_{j>=1} (1 + l z / j^s),
/// truncated at `trunc` factors. Only the transform side is evaluable.
struct GevreyProduct {
    double s;        // m_j = j^s, s > 1 (Gevrey exponent a = 1/s)
    double l;        // scale inside the factors
    long trunc;      // number of factors kept
};

/// Laplace-side kernel K(l) = l^{-2} prod_{n>=0} (n^2-l)/(n^2+l), truncated.
struct BaumerProduct {
    long trunc;
};

/// Raw samples acting as a kernel.
struct SampledKernel {
    SampledFn fn;
};

/// Tagged description of a convolution kernel k, with sampling, closed-form
/// Laplace transform and convolution powers where available. Every variant
/// satisfies 0 in supp(k).
class Kernel {
  public:
    using Variant = std::variant<FractionalJ, Heaviside, ExpWeighted, Indicator01, HeatBoundary,
                                 GevreyProduct, BaumerProduct, SampledKernel>;

    static Kernel fractional_j(double alpha) {
        if (!(alpha > 0.0)) throw std::invalid_argument("fractional_j: alpha must be positive");
        return Kernel(FractionalJ{alpha});
    }
    static Kernel heaviside() { return Kernel(Heaviside{}); }
    static Kernel exp_weighted(cx z, Kernel inner) {
        return Kernel(ExpWeighted{z, std::make_shared<const Kernel>(std::move(inner))});
    }
    static Kernel indicator01() { return Kernel(Indicator01{}); }
    static Kernel heat_boundary(double a) {
        if (!(a > 0.0)) throw std::invalid_argument("heat_boundary: a must be positive");
        return Kernel(HeatBoundary{a});
    }
    static Kernel gevrey_product(double s, double l, long trunc) {
        if (s > 0.0 && s < 1.0) s = 1.0 / s;  // accept the exponent a in (0,1) as well
        if (!(s > 1.0)) throw std::invalid_argument("gevrey_product: need s > 1 (or a in (0,1))");
        if (!(l > 0.0) || trunc < 1) throw std::invalid_argument("gevrey_product: bad parameters");
        return Kernel(GevreyProduct{s, l, trunc});
    }
    static Kernel baumer_product(long trunc) {
        if (trunc < 1) throw std::invalid_argument("baumer_product: trunc must be >= 1");
        return Kernel(BaumerProduct{trunc});
    }
    static Kernel from_samples(SampledFn fn) { return Kernel(SampledKernel{std::move(fn)}); }

    const Variant& variant() const { return v_; }

    template <typename T>
    const T* get_if() const {
        return std::get_if<T>(&v_);
    }

    /// Abscissa of absolute convergence abs(|k|). -inf for compactly
    /// supported kernels; Laplace-side product kernels are exponentially
    /// bounded and reported with abscissa 0.
    double abs_k() const {
        const double neg_inf = -std::numeric_limits<double>::infinity();
        return std::visit(
            [&](const auto& k) -> double {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, Indicator01>) return neg_inf;
                else if constexpr (std::is_same_v<T, ExpWeighted>) return k.z.real() + k.inner->abs_k();
                else if constexpr (std::is_same_v<T, SampledKernel>)
                    return k.fn.support_end ? neg_inf : 0.0;
                else return 0.0;
            },
            v_);
    }

    /// Whether the kernel has an evaluable time-domain representation
    /// (the product kernels are defined through their transforms only).
    bool has_time_domain() const {
        return !std::holds_alternative<GevreyProduct>(v_) && !std::holds_alternative<BaumerProduct>(v_);
    }

    /// Whether point evaluation at t=0 is unusable (singularity, or sharply
    /// non-polynomial start) so the first cell must be averaged.
    bool singular_at_zero() const {
        if (const auto* j = get_if<FractionalJ>()) return j->alpha < 1.0;
        if (get_if<HeatBoundary>()) return true;
        if (const auto* e = get_if<ExpWeighted>()) return e->inner->singular_at_zero();
        return false;
    }

    /// Point value k(t) for t > 0 (and t = 0 where regular).
    cx value(double t) const {
        return std::visit(
            [&](const auto& k) -> cx {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, FractionalJ>) {
                    if (t == 0.0) {
                        if (k.alpha == 1.0) return 1.0;
                        if (k.alpha > 1.0) return 0.0;
                        throw std::domain_error("fractional_j: singular at t=0");
                    }
                    return std::pow(t, k.alpha - 1.0) / std::tgamma(k.alpha);
                } else if constexpr (std::is_same_v<T, Heaviside>) {
                    return 1.0;
                } else if constexpr (std::is_same_v<T, ExpWeighted>) {
                    return std::exp(k.z * t) * k.inner->value(t);
                } else if constexpr (std::is_same_v<T, Indicator01>) {
                    return (t < 1.0) ? 1.0 : 0.0;
                } else if constexpr (std::is_same_v<T, HeatBoundary>) {
                    if (t <= 0.0) return 0.0;
                    double ex = -k.a * k.a / (4.0 * t);
                    if (ex < -745.0) return 0.0;
                    return std::exp(ex) / (2.0 * std::sqrt(M_PI * t * t * t));
                } else if constexpr (std::is_same_v<T, SampledKernel>) {
                    return k.fn[k.fn.grid.index_of(t)];
                } else {
                    throw std::domain_error("kernel has no time-domain representation");
                }
            },
            v_);
    }

    /// Exact (or adaptively computed) cell average (1/dt) int_0^dt k.
    cx first_cell_average(double dt) const {
        if (const auto* j = get_if<FractionalJ>())
            return std::pow(dt, j->alpha - 1.0) / std::tgamma(j->alpha + 1.0);
        if (const auto* h = get_if<HeatBoundary>()) {
            double a = h->a;
            double val = adaptive_simpson(
                [a](double t) {
                    if (t <= 0.0) return 0.0;
                    double ex = -a * a / (4.0 * t);
                    return ex < -745.0 ? 0.0 : std::exp(ex) / (2.0 * std::sqrt(M_PI * t * t * t));
                },
                0.0, dt, 1e-15 * std::max(1.0, dt));
            return val / dt;
        }
        if (const auto* e = get_if<ExpWeighted>()) {
            if (const auto* j = e->inner->get_if<FractionalJ>()) {
                // (1/dt) int_0^dt e^{zt} t^{a-1}/Gamma(a) dt as a series in z*dt
                double alpha = j->alpha;
                cx zdt = e->z * dt;
                cx term = 1.0, acc = 1.0 / alpha;
                for (int n = 1; n < 60; ++n) {
                    term *= zdt / static_cast<double>(n);
                    cx add = term / (alpha + n);
                    acc += add;
                    if (std::abs(add) < 1e-17 * std::abs(acc)) break;
                }
                return acc * std::pow(dt, alpha - 1.0) / std::tgamma(alpha);
            }
            return std::exp(e->z * 0.5 * dt) * e->inner->first_cell_average(dt);
        }
        return value(0.0);
    }

    /// Sample on a grid. Singular kernels get the exact first-cell average at
    /// t=0; jump discontinuities landing on a node are sampled at half value
    /// so that trapezoid sums match the untruncated integrals.
    SampledFn sample(const Grid& g) const {
        if (!has_time_domain())
            throw std::domain_error("kernel '" + tag() + "' has no time-domain representation");
        if (const auto* s = get_if<SampledKernel>()) {
            if (s->fn.grid != g) throw std::invalid_argument("sampled kernel: grid mismatch");
            return s->fn;
        }
        std::vector<cx> v(g.n_points);
        for (std::size_t i = 0; i < g.n_points; ++i) v[i] = value_for_node(g.t(i));
        if (singular_at_zero()) v[0] = first_cell_average(g.dt);
        std::optional<double> supp;
        if (std::holds_alternative<Indicator01>(v_)) supp = std::min(1.0, g.horizon());
        if (const auto* e = get_if<ExpWeighted>(); e && e->inner->get_if<Indicator01>())
            supp = std::min(1.0, g.horizon());
        return SampledFn(g, std::move(v), supp);
    }

    /// Closed-form n-fold convolution power, as (scale, kernel), when known.
    std::optional<std::pair<double, Kernel>> conv_power_closed(int n) const {
        if (n == 1) return std::make_pair(1.0, *this);
        if (const auto* j = get_if<FractionalJ>())
            return std::make_pair(1.0, Kernel::fractional_j(n * j->alpha));
        if (get_if<Heaviside>()) return std::make_pair(1.0, Kernel::fractional_j(double(n)));
        if (const auto* h = get_if<HeatBoundary>())
            return std::make_pair(n * std::pow(h->a, 1.0 - n), Kernel::heat_boundary(n * h->a));
        if (const auto* e = get_if<ExpWeighted>()) {
            auto inner_pow = e->inner->conv_power_closed(n);
            if (!inner_pow) return std::nullopt;
            return std::make_pair(inner_pow->first, Kernel::exp_weighted(e->z, inner_pow->second));
        }
        return std::nullopt;
    }

    /// Closed-form Laplace transform at lambda, or nullopt when the variant
    /// has none. Throws when lambda lies outside the validity half-plane.
    std::optional<cx> laplace_analytic(cx lambda) const;

    std::string tag() const {
        return std::visit(
            [](const auto& k) -> std::string {
                using T = std::decay_t<decltype(k)>;
                std::ostringstream os;
                if constexpr (std::is_same_v<T, FractionalJ>) os << "fractional_j(" << k.alpha << ")";
                else if constexpr (std::is_same_v<T, Heaviside>) os << "heaviside";
                else if constexpr (std::is_same_v<T, ExpWeighted>)
                    os << "exp_weighted(" << k.z.real() << (k.z.imag() < 0 ? "-" : "+")
                       << std::abs(k.z.imag()) << "i," << k.inner->tag() << ")";
                else if constexpr (std::is_same_v<T, Indicator01>) os << "indicator01";
                else if constexpr (std::is_same_v<T, HeatBoundary>) os << "heat_boundary(" << k.a << ")";
                else if constexpr (std::is_same_v<T, GevreyProduct>)
                    os << "gevrey_product(s=" << k.s << ",l=" << k.l << ",trunc=" << k.trunc << ")";
                else if constexpr (std::is_same_v<T, BaumerProduct>) os << "baumer_product(" << k.trunc << ")";
                else os << "sampled";
                return os.str();
            },
            v_);
    }

  private:
    explicit Kernel(Variant v) : v_(std::move(v)) {}

    // point value, with node-aligned jumps halved
    cx value_for_node(double t) const {
        if (std::holds_alternative<Indicator01>(v_)) {
            if (t < 1.0) return 1.0;
            if (t == 1.0) return 0.5;
            return 0.0;
        }
        if (const auto* e = get_if<ExpWeighted>(); e && e->inner->get_if<Indicator01>()) {
            if (t < 1.0) return std::exp(e->z * t);
            if (t == 1.0) return 0.5 * std::exp(e->z * t);
            return 0.0;
        }
        if (t == 0.0 && singular_at_zero()) return 0.0;  // patched afterwards
        return value(t);
    }

    Variant v_;
};

/// Truncated evaluation of P(z) = prod (1 + l z / j^s) together with an
/// additive bound on the discarded tail:
/// |P - P_J| <= |P_J| (exp(l |z| sum_{j>J} j^{-s}) - 1), sum_{j>J} j^{-s} <= J^{1-s}/(s-1).
struct ProductValue {
    cx value;
    double tail_bound;
};

inline ProductValue gevrey_P(const GevreyProduct& gp, cx z) {
    cx p = 1.0;
    for (long j = 1; j <= gp.trunc; ++j)
        p *= 1.0 + gp.l * z / std::pow(static_cast<double>(j), gp.s);
    double tail_sum = std::pow(static_cast<double>(gp.trunc), 1.0 - gp.s) / (gp.s - 1.0);
    double bound = std::abs(p) * std::expm1(gp.l * std::abs(z) * tail_sum);
    return {p, bound};
}

/// Truncated Baumer product K(l) = l^{-2} prod_{n=0}^{N} (n^2-l)/(n^2+l).
/// Returns exactly 0 when a factor vanishes.
inline cx baumer_K(cx lambda, long trunc) {
    if (!(lambda.real() > 0.0)) throw std::domain_error("baumer_K: requires Re lambda > 0");
    cx p = 1.0;
    for (long n = 0; n <= trunc; ++n) {
        double n2 = static_cast<double>(n) * static_cast<double>(n);
        cx num = n2 - lambda;
        if (num == cx{0.0, 0.0}) return cx{0.0, 0.0};
        p *= num / (n2 + lambda);
    }
    return p / (lambda * lambda);
}

namespace detail {
inline cx expm1_cx(cx z) {
    if (std::abs(z) < 1e-8) return z * (1.0 + 0.5 * z * (1.0 + z / 3.0));
    return std::exp(z) - 1.0;
}
}  // namespace detail

inline std::optional<cx> Kernel::laplace_analytic(cx lambda) const {
    return std::visit(
        [&](const auto& k) -> std::optional<cx> {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, FractionalJ>) {
                if (!(lambda.real() > 0.0)) throw std::domain_error("laplace: requires Re lambda > 0");
                return std::pow(lambda, cx{-k.alpha, 0.0});
            } else if constexpr (std::is_same_v<T, Heaviside>) {
                if (!(lambda.real() > 0.0)) throw std::domain_error("laplace: requires Re lambda > 0");
                return 1.0 / lambda;
            } else if constexpr (std::is_same_v<T, ExpWeighted>) {
                return k.inner->laplace_analytic(lambda - k.z);
            } else if constexpr (std::is_same_v<T, Indicator01>) {
                if (std::abs(lambda) < 1e-12) return 1.0;
                return -detail::expm1_cx(-lambda) / lambda;
            } else if constexpr (std::is_same_v<T, HeatBoundary>) {
                if (!(lambda.real() > 0.0)) throw std::domain_error("laplace: requires Re lambda > 0");
                return std::exp(-k.a * std::sqrt(lambda)) / k.a;
            } else if constexpr (std::is_same_v<T, GevreyProduct>) {
                if (lambda.real() < 0.0) throw std::domain_error("laplace: requires Re lambda >= 0");
                return 1.0 / gevrey_P(k, lambda).value;
            } else if constexpr (std::is_same_v<T, BaumerProduct>) {
                return baumer_K(lambda, k.trunc);
            } else {
                return std::nullopt;
            }
        },
        v_);
}

/// kernel_laplace_analytic operation: closed-form transform or nullopt.
inline std::optional<cx> kernel_laplace_analytic(const Kernel& k, cx lambda) {
    return k.laplace_analytic(lambda);
}

/// n-fold convolution power sampled on a grid: the closed form when the
/// variant has one, otherwise repeated numeric convolution.
inline SampledFn conv_power(const Kernel& k, int n, const Grid& g) {
    if (n < 1) throw std::invalid_argument("conv_power: n must be >= 1");
    if (auto closed = k.conv_power_closed(n)) {
        SampledFn s = closed->second.sample(g);
        if (closed->first != 1.0) s *= cx{closed->first, 0.0};
        return s;
    }
    SampledFn base = k.sample(g);
    SampledFn acc = base;
    for (int i = 1; i < n; ++i) acc = convolve(acc, base);
    return acc;
}

/// Product-quadrature rule for integrals of k against piecewise-linear data.
/// Encapsulated as per-lag coefficients built from the kernel cell moments
///   M0(m) = int_cell k(u) du,   M1(m) = (1/dt) int_cell (u - m dt) k(u) du,
/// so that int_0^{t_i} k(t_i-s) g(s) ds = c0 g_i + sum_r c_r g_{i-r} + e_i g_0.
/// Fractional kernels use exact moments (second order even at the t=0
/// singularity); all other kernels use the moments that reproduce the plain
/// trapezoid rule on their samples.
struct KernelRule {
    std::vector<cx> c;     // c[0] self weight, c[r] interior lag weights
    std::vector<cx> edge;  // edge[r] = M1(r-1), weight of the far node

    /// int_0^{t_i} k(t_i - s) g(s) ds
    template <typename T>
    T conv_at(const std::vector<T>& g, std::size_t i, const T& zero) const {
        if (i == 0) return zero;
        T acc = zero + c[0] * g[i] + edge[i] * g[0];
        for (std::size_t r = 1; r < i; ++r) acc += c[r] * g[i - r];
        return acc;
    }

    /// int_{t_i}^{t_ib} k(s - t_i) g(s) ds
    template <typename T>
    T dual_at(const std::vector<T>& g, std::size_t i, std::size_t ib, const T& zero) const {
        if (ib <= i) return zero;
        std::size_t B = ib - i;
        T acc = zero + c[0] * g[i] + edge[B] * g[ib];
        for (std::size_t r = 1; r < B; ++r) acc += c[r] * g[i + r];
        return acc;
    }

    cx conv_at(const std::vector<cx>& g, std::size_t i) const { return conv_at(g, i, cx{0.0, 0.0}); }
    cx dual_at(const std::vector<cx>& g, std::size_t i, std::size_t ib) const {
        return dual_at(g, i, ib, cx{0.0, 0.0});
    }

    static KernelRule from_moments(const std::vector<cx>& M0, const std::vector<cx>& M1) {
        std::size_t n = M0.size();
        KernelRule r;
        r.c.assign(n, cx{0.0, 0.0});
        r.edge.assign(n + 1, cx{0.0, 0.0});
        r.c[0] = M0[0] - M1[0];
        for (std::size_t m = 1; m < n; ++m) r.c[m] = M1[m - 1] + M0[m] - M1[m];
        for (std::size_t m = 0; m < n; ++m) r.edge[m + 1] = M1[m];
        return r;
    }
};

struct CellMoments {
    std::vector<cx> M0;
    std::vector<cx> M1;
};

/// Cell moments of a kernel on a grid: exact (closed form) for fractional
/// powers, trapezoid-consistent (M1 = dt k_{m+1}/2) for everything else.
namespace detail {

// S(p) = sum_n (z dt)^n / (n! (alpha + p + n)), so that
// int_0^dt e^{zu} u^{alpha-1+p} du = dt^{alpha+p} S(p)
inline cx exp_frac_series(double alpha, cx zdt, int p) {
    cx term = 1.0, acc = 1.0 / (alpha + p);
    for (int n = 1; n < 80; ++n) {
        term *= zdt / static_cast<double>(n);
        cx add = term / (alpha + p + n);
        acc += add;
        if (std::abs(add) < 1e-17 * std::abs(acc)) break;
    }
    return acc;
}

}  // namespace detail

inline CellMoments kernel_cell_moments(const Kernel& k, const Grid& g, double scale = 1.0) {
    std::size_t cells = g.n_points - 1;
    double dt = g.dt;
    CellMoments cm{std::vector<cx>(cells), std::vector<cx>(cells)};
    double a = 0.0;
    if (const auto* j = k.get_if<FractionalJ>()) a = j->alpha;
    else if (k.get_if<Heaviside>()) a = 1.0;
    if (const auto* e = k.get_if<ExpWeighted>()) {
        // e^{zu} j_alpha(u): series moments on the singular first cell,
        // 5-point Gauss per cell afterwards
        if (const auto* ji = e->inner->get_if<FractionalJ>()) {
            double al = ji->alpha;
            cx z = e->z;
            double ga = std::tgamma(al);
            cm.M0[0] = scale * std::pow(dt, al) * detail::exp_frac_series(al, z * dt, 0) / ga;
            cm.M1[0] = scale * std::pow(dt, al + 1.0) * detail::exp_frac_series(al, z * dt, 1) / (ga * dt);
            auto kf = [&](double u) { return std::exp(z * u) * std::pow(u, al - 1.0) / ga; };
            for (std::size_t m = 1; m < cells; ++m) {
                double lo = m * dt, hi = (m + 1) * dt;
                cm.M0[m] = scale * gauss5(kf, lo, hi);
                cm.M1[m] = scale * gauss5([&](double u) { return (u - lo) * kf(u); }, lo, hi) / dt;
            }
            return cm;
        }
    }
    if (a > 0.0) {
        double ga1 = std::tgamma(a + 1.0);
        double ga2 = std::tgamma(a) * (a + 1.0);  // int u^a du / Gamma(a) divisor
        double pa_lo = 0.0, pa1_lo = 0.0;         // m^a, m^{a+1}
        for (std::size_t m = 0; m < cells; ++m) {
            double hi = static_cast<double>(m + 1);
            double pa_hi = std::pow(hi, a), pa1_hi = std::pow(hi, a + 1.0);
            double m0 = std::pow(dt, a) * (pa_hi - pa_lo) / ga1;
            double u1 = std::pow(dt, a + 1.0) * (pa1_hi - pa1_lo) / ga2;
            cm.M0[m] = scale * m0;
            cm.M1[m] = scale * (u1 / dt - static_cast<double>(m) * m0);
            pa_lo = pa_hi;
            pa1_lo = pa1_hi;
        }
        return cm;
    }
    SampledFn kv = k.sample(g);
    for (std::size_t m = 0; m < cells; ++m) {
        cm.M0[m] = scale * dt * 0.5 * (kv[m] + kv[m + 1]);
        cm.M1[m] = scale * dt * 0.5 * kv[m + 1];
    }
    return cm;
}

inline KernelRule make_kernel_rule(const Kernel& k, const Grid& g, double scale = 1.0) {
    CellMoments cm = kernel_cell_moments(k, g, scale);
    return KernelRule::from_moments(cm.M0, cm.M1);
}

/// Rule for k^{*n} (closed form when available, sampled power otherwise).
inline KernelRule make_power_rule(const Kernel& k, int n, const Grid& g) {
    if (n == 1) return make_kernel_rule(k, g);
    if (auto closed = k.conv_power_closed(n)) return make_kernel_rule(closed->second, g, closed->first);
    SampledFn base = k.sample(g);
    SampledFn acc = base;
    for (int i = 1; i < n; ++i) acc = convolve(acc, base);
    return make_kernel_rule(Kernel::from_samples(acc), g);
}

/// Running integral int_0^{t_i} k by telescoped cell masses: exact for
/// fractional kernels, trapezoid-consistent for the rest.
inline SampledFn kernel_cumulative(const Kernel& k, const Grid& g) {
    CellMoments cm = kernel_cell_moments(k, g);
    std::vector<cx> out(g.n_points);
    out[0] = cx{0.0, 0.0};
    for (std::size_t m = 1; m < g.n_points; ++m) out[m] = out[m - 1] + cm.M0[m - 1];
    return SampledFn(g, std::move(out));
}

/// Order of a pure power kernel: alpha for j_alpha, 1 for the Heaviside.
inline std::optional<double> fractional_order(const Kernel& k) {
    if (const auto* j = k.get_if<FractionalJ>()) return j->alpha;
    if (k.get_if<Heaviside>()) return 1.0;
    return std::nullopt;
}

/// A Kernel representing k^{*n}: the closed-form variant when the power has
/// one with unit scale, otherwise the sampled power.
inline Kernel power_kernel(const Kernel& k, int n, const Grid& g) {
    if (n == 1) return k;
    if (auto closed = k.conv_power_closed(n); closed && closed->first == 1.0) return closed->second;
    return Kernel::from_samples(conv_power(k, n, g));
}

/// A Kernel representing a*b (j_{alpha+beta} for pure powers, sampled otherwise).
inline Kernel convolve_kernels(const Kernel& a, const Kernel& b, const Grid& g) {
    auto oa = fractional_order(a), ob = fractional_order(b);
    if (oa && ob) return Kernel::fractional_j(*oa + *ob);
    return Kernel::from_samples(convolve(a.sample(g), b.sample(g)));
}

/// Checks the two-sided bound e^{(l |z|)^a} <= |P(z)| <= e^{(L |z|)^a} on a
/// sample set with Re z >= 0, fitting the empirical constants. The residual
/// is the worst violation of log|P(z)| > 0 at nonzero samples (the sandwich
/// holds with some 0 < l <= L iff log|P| stays positive).
inline ResidualReport gevrey_bound_check(const Kernel& kernel, const std::vector<cx>& sample_points,
                                         const Grid& grid_summary, double tol = 1e-12) {
    const auto* gp = kernel.get_if<GevreyProduct>();
    if (!gp) throw std::invalid_argument("gevrey_bound_check: kernel is not a gevrey product");
    if (sample_points.empty()) throw std::invalid_argument("gevrey_bound_check: empty sample set");
    double a = 1.0 / gp->s;
    double l_emp = std::numeric_limits<double>::infinity();
    double L_emp = 0.0;
    double violation = 0.0;
    // regression of log|P| against |z|^a through the origin
    double sxx = 0.0, sxy = 0.0;
    for (cx z : sample_points) {
        if (z.real() < 0.0) throw std::domain_error("gevrey_bound_check: requires Re z >= 0");
        double az = std::abs(z);
        double logP = std::log(std::abs(gevrey_P(*gp, z).value));
        if (az < 1e-14) {
            violation = std::max(violation, std::abs(logP));  // |P(0)| = 1 exactly
            continue;
        }
        if (logP <= 0.0) {
            violation = std::max(violation, -logP + tol);
            continue;
        }
        double ratio = std::pow(logP, 1.0 / a) / az;
        l_emp = std::min(l_emp, ratio);
        L_emp = std::max(L_emp, ratio);
        double x = std::pow(az, a);
        sxx += x * x;
        sxy += x * logP;
    }
    std::map<std::string, double> params{{"a", a},
                                         {"l", gp->l},
                                         {"trunc", static_cast<double>(gp->trunc)},
                                         {"n_samples", static_cast<double>(sample_points.size())}};
    if (L_emp > 0.0) {
        params["l_emp"] = l_emp;
        params["L_emp"] = L_emp;
        params["slope"] = sxx > 0.0 ? sxy / sxx : 0.0;
    }
    return ResidualReport("gevrey_bound", violation, grid_summary, std::move(params), tol);
}

}  // namespace convsemi
