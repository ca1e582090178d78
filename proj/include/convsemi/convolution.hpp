#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "convsemi/grid.hpp"
#include "convsemi/quadrature.hpp"

namespace convsemi {

/// Causal convolution (f*g)(t) = int_0^t f(t-s) g(s) ds at a single node,
/// by trapezoidal product quadrature.
inline cx point_convolve(const SampledFn& f, const SampledFn& g, std::size_t i) {
    f.require_same_grid(g);
    if (i == 0) return cx{0.0, 0.0};
    cx acc = 0.5 * (f[0] * g[i] + f[i] * g[0]);
    for (std::size_t j = 1; j < i; ++j) acc += f[j] * g[i - j];
    return f.grid.dt * acc;
}

/// Causal convolution on the whole grid. The support of the result is
/// min(horizon, b_f + b_g) when both operands carry a support hint.
inline SampledFn convolve(const SampledFn& f, const SampledFn& g) {
    f.require_same_grid(g);
    const Grid& gr = f.grid;
    std::vector<cx> out(gr.n_points, cx{0.0, 0.0});
    // restrict the outer loop when supports are known: (f*g)(t)=0 beyond b_f+b_g
    std::size_t i_max = gr.n_points - 1;
    std::optional<double> supp;
    if (f.support_end && g.support_end) {
        supp = std::min(gr.horizon(), *f.support_end + *g.support_end);
        i_max = std::min<std::size_t>(i_max, static_cast<std::size_t>(std::ceil(*supp / gr.dt + 0.5)));
    }
    for (std::size_t i = 1; i <= i_max; ++i) {
        cx acc = 0.5 * (f[0] * g[i] + f[i] * g[0]);
        for (std::size_t j = 1; j < i; ++j) acc += f[j] * g[i - j];
        out[i] = gr.dt * acc;
    }
    return SampledFn(gr, std::move(out), supp);
}

/// Dual convolution (f o g)(t) = int_t^inf f(s-t) g(s) ds. The second factor
/// must carry a support hint: the integral is truncated at its support end,
/// which is exact when g really vanishes beyond it.
inline SampledFn dual_convolve(const SampledFn& f, const SampledFn& g) {
    f.require_same_grid(g);
    if (!g.support_end)
        throw std::invalid_argument(
            "dual_convolve: horizon truncation unsound (second factor has unbounded support)");
    const Grid& gr = f.grid;
    std::size_t ib = gr.index_of(*g.support_end, 0.5);  // snap support end to nearest node
    std::vector<cx> out(gr.n_points, cx{0.0, 0.0});
    for (std::size_t i = 0; i < ib; ++i) {
        cx acc = 0.5 * (f[0] * g[i] + f[ib - i] * g[ib]);
        for (std::size_t j = i + 1; j < ib; ++j) acc += f[j - i] * g[j];
        out[i] = gr.dt * acc;
    }
    return SampledFn(gr, std::move(out), *g.support_end);
}

/// Running integral K(t) = int_0^t f(s) ds by the trapezoidal rule; K(0) = 0.
inline SampledFn cumulative(const SampledFn& f) {
    const Grid& gr = f.grid;
    std::vector<cx> out(gr.n_points);
    out[0] = cx{0.0, 0.0};
    for (std::size_t i = 1; i < gr.n_points; ++i)
        out[i] = out[i - 1] + gr.dt * 0.5 * (f[i - 1] + f[i]);
    return SampledFn(gr, std::move(out));
}

/// Truncated Laplace transform int_0^horizon e^{-lambda t} f(t) dt.
inline cx laplace_numeric(const SampledFn& f, cx lambda) {
    const Grid& gr = f.grid;
    std::vector<cx> h(gr.n_points);
    for (std::size_t i = 0; i < gr.n_points; ++i) h[i] = std::exp(-lambda * gr.t(i)) * f[i];
    return trapezoid(h, 0, gr.n_points - 1, gr.dt);
}

struct LaplaceResult {
    cx value;
    std::optional<double> tail_bound;  // bound on the discarded int_horizon^inf
};

/// Laplace transform with a truncation-tail bound, valid when |f| <= M e^{w t}:
/// |tail| <= M e^{(w - Re lambda) T} / (Re lambda - w).
inline LaplaceResult laplace_with_tail(const SampledFn& f, cx lambda, double bound_M, double bound_w) {
    LaplaceResult r{laplace_numeric(f, lambda), std::nullopt};
    double gap = lambda.real() - bound_w;
    if (gap > 0.0) r.tail_bound = bound_M * std::exp(-gap * f.grid.horizon()) / gap;
    return r;
}

/// Partial convolution-type integral int_0^{t_upper} f(t_at - s) g(s) ds
/// (trapezoid over nodes, everything grid-aligned).
inline cx partial_product_integral(const SampledFn& f, const SampledFn& g, std::size_t i_at,
                                   std::size_t i_upper) {
    f.require_same_grid(g);
    if (i_upper > i_at) throw std::domain_error("partial_product_integral: upper limit exceeds t");
    if (i_upper == 0) return cx{0.0, 0.0};
    cx acc = 0.5 * (f[i_at] * g[0] + f[i_at - i_upper] * g[i_upper]);
    for (std::size_t j = 1; j < i_upper; ++j) acc += f[i_at - j] * g[j];
    return f.grid.dt * acc;
}

}  // namespace convsemi
