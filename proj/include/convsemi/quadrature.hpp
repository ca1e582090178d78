#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "convsemi/grid.hpp"

namespace convsemi {

/// Trapezoidal integral of uniformly sampled values over node range [i0, i1].
template <typename T>
T trapezoid(const std::vector<T>& v, std::size_t i0, std::size_t i1, double dt) {
    if (i1 >= v.size() || i0 > i1) throw std::invalid_argument("trapezoid: bad index range");
    if (i0 == i1) return T{};
    T acc = 0.5 * (v[i0] + v[i1]);
    for (std::size_t j = i0 + 1; j < i1; ++j) acc += v[j];
    return dt * acc;
}

/// Composite Simpson over node range [i0, i1] (exact for cubics).
/// An odd interval count is finished with a 3/8 block; a single interval
/// falls back to one trapezoid.
template <typename T>
T simpson(const std::vector<T>& v, std::size_t i0, std::size_t i1, double dt) {
    if (i1 >= v.size() || i0 > i1) throw std::invalid_argument("simpson: bad index range");
    std::size_t m = i1 - i0;
    if (m == 0) return T{};
    if (m == 1) return dt * 0.5 * (v[i0] + v[i1]);
    T acc{};
    std::size_t j = i0;
    if (m % 2 == 1) {  // peel a 3/8 block of 3 intervals off the end
        std::size_t e = i1 - 3;
        acc += (3.0 * dt / 8.0) * (v[e] + 3.0 * v[e + 1] + 3.0 * v[e + 2] + v[e + 3]);
        i1 = e;
        m = i1 - i0;
        if (m == 0) return acc;
    }
    T s = v[j] + v[i1];
    for (std::size_t i = j + 1; i < i1; i += 2) s += 4.0 * v[i];
    for (std::size_t i = j + 2; i < i1; i += 2) s += 2.0 * v[i];
    acc += (dt / 3.0) * s;
    return acc;
}

/// Node weights (in units of dt) for the composite Simpson rule over m
/// intervals, with a 3/8 block absorbing an odd leftover and a trapezoid
/// fallback for a single interval. Usable with any summable integrand type.
inline std::vector<double> simpson_weights(std::size_t m) {
    std::vector<double> w(m + 1, 0.0);
    if (m == 0) return w;
    if (m == 1) {
        w[0] = w[1] = 0.5;
        return w;
    }
    std::size_t end = m;
    if (m % 2 == 1) {
        end = m - 3;
        w[end] += 3.0 / 8.0;
        w[end + 1] += 9.0 / 8.0;
        w[end + 2] += 9.0 / 8.0;
        w[end + 3] += 3.0 / 8.0;
        if (end == 0) return w;
    }
    w[0] += 1.0 / 3.0;
    w[end] += 1.0 / 3.0;
    for (std::size_t i = 1; i < end; i += 2) w[i] += 4.0 / 3.0;
    for (std::size_t i = 2; i < end; i += 2) w[i] += 2.0 / 3.0;
    return w;
}

/// Adaptive Simpson quadrature for a callable on [a, b].
namespace detail {
template <typename F>
double adaptive_simpson_rec(F& f, double a, double b, double fa, double fm, double fb, double whole,
                            double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <typename F>
double adaptive_simpson(F f, double a, double b, double tol = 1e-12, int max_depth = 40) {
    if (b <= a) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Fixed 5-point Gauss-Legendre rule on [a, b] (exact through degree 9).
/// Works for real- or complex-valued integrands.
template <typename F>
auto gauss5(F&& f, double a, double b) -> decltype(1.0 * f(a)) {
    static const double xs[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                 0.5384693101056831, 0.9061798459386640};
    static const double ws[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                 0.4786286704993665, 0.2369268850561891};
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    decltype(1.0 * f(a)) acc = ws[0] * f(c + h * xs[0]);
    for (int i = 1; i < 5; ++i) acc += ws[i] * f(c + h * xs[i]);
    return h * acc;
}

/// Second-order finite-difference derivative of sampled values
/// (central in the interior, one-sided three-point at the ends).
inline std::vector<cx> diff_samples(const std::vector<cx>& v, double dt) {
    std::size_t n = v.size();
    if (n < 3) throw std::invalid_argument("diff_samples: need at least 3 points");
    std::vector<cx> d(n);
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dt);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dt);
    return d;
}

inline SampledFn derivative(const SampledFn& f) {
    return SampledFn(f.grid, diff_samples(f.values, f.grid.dt), f.support_end);
}

}  // namespace convsemi
