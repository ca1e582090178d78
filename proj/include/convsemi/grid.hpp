#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace convsemi {

using cx = std::complex<double>;

/// Uniform time grid on [0, dt*(n_points-1)] with origin fixed at 0.
/// Node positions are always derived from the index (t_i = i*dt), never
/// accumulated, so there is no drift.
struct Grid {
    double dt = 0.0;
    std::size_t n_points = 0;

    Grid() = default;
    Grid(double dt_, std::size_t n_points_) : dt(dt_), n_points(n_points_) {
        if (!(dt > 0.0)) throw std::invalid_argument("Grid: dt must be positive");
        if (n_points < 2) throw std::invalid_argument("Grid: need at least 2 points");
    }

    double t(std::size_t i) const { return static_cast<double>(i) * dt; }
    double horizon() const { return t(n_points - 1); }

    /// Index of the node nearest to time `tt`. Throws if `tt` is off the grid
    /// by more than `tol` cells or outside the horizon.
    std::size_t index_of(double tt, double tol = 1e-9) const {
        if (tt < -tol * dt || tt > horizon() + tol * dt)
            throw std::domain_error("Grid: time " + std::to_string(tt) + " outside horizon");
        double ir = tt / dt;
        auto i = static_cast<std::size_t>(std::llround(ir));
        if (i >= n_points) i = n_points - 1;
        if (std::abs(ir - static_cast<double>(i)) > tol)
            throw std::domain_error("Grid: time " + std::to_string(tt) + " is not grid-aligned");
        return i;
    }

    bool operator==(const Grid& o) const { return dt == o.dt && n_points == o.n_points; }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

/// A complex-valued function sampled on a uniform grid, with an optional
/// tracked support interval [0, support_end]. This is the carrier type for
/// kernels, test functions, solutions and residual traces.
struct SampledFn {
    Grid grid;
    std::vector<cx> values;
    std::optional<double> support_end;  // f == 0 for t > support_end

    SampledFn() = default;
    SampledFn(Grid g, std::vector<cx> v, std::optional<double> support = std::nullopt)
        : grid(g), values(std::move(v)), support_end(support) {
        if (values.size() != grid.n_points)
            throw std::invalid_argument("SampledFn: values length must equal grid.n_points");
        if (support_end && (*support_end < 0.0 || *support_end > grid.horizon() + 0.5 * grid.dt))
            throw std::invalid_argument("SampledFn: support_end outside [0, horizon]");
    }

    static SampledFn zero(Grid g, std::optional<double> support = std::nullopt) {
        return SampledFn(g, std::vector<cx>(g.n_points, cx{0.0, 0.0}), support);
    }

    std::size_t size() const { return values.size(); }
    cx operator[](std::size_t i) const { return values[i]; }
    cx& operator[](std::size_t i) { return values[i]; }

    /// Largest |f(t_i)| with t_i beyond the declared support (0 if no hint).
    double support_violation() const {
        if (!support_end) return 0.0;
        double worst = 0.0;
        for (std::size_t i = 0; i < size(); ++i)
            if (grid.t(i) > *support_end + 0.5 * grid.dt) worst = std::max(worst, std::abs(values[i]));
        return worst;
    }

    SampledFn& operator*=(cx c) {
        for (auto& v : values) v *= c;
        return *this;
    }
    SampledFn& operator+=(const SampledFn& o) {
        require_same_grid(o);
        for (std::size_t i = 0; i < size(); ++i) values[i] += o.values[i];
        if (support_end && o.support_end)
            support_end = std::max(*support_end, *o.support_end);
        else
            support_end.reset();
        return *this;
    }

    void require_same_grid(const SampledFn& o) const {
        if (grid != o.grid) throw std::invalid_argument("SampledFn: grid mismatch");
    }
};

inline SampledFn operator*(cx c, SampledFn f) {
    f *= c;
    return f;
}

inline SampledFn operator-(const SampledFn& a, const SampledFn& b) {
    a.require_same_grid(b);
    SampledFn r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    r.support_end.reset();
    if (a.support_end && b.support_end) r.support_end = std::max(*a.support_end, *b.support_end);
    return r;
}

inline double max_abs(const SampledFn& f) {
    double m = 0.0;
    for (const auto& v : f.values) m = std::max(m, std::abs(v));
    return m;
}

inline double max_abs_diff(const SampledFn& a, const SampledFn& b) {
    a.require_same_grid(b);
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Sample a scalar callable on the grid.
template <typename F>
SampledFn sample_function(const Grid& g, F&& f, std::optional<double> support = std::nullopt) {
    std::vector<cx> v(g.n_points);
    for (std::size_t i = 0; i < g.n_points; ++i) v[i] = cx(f(g.t(i)));
    return SampledFn(g, std::move(v), support);
}

/// e_lambda(t) = exp(-lambda*t) sampled on the grid.
inline SampledFn exp_decay(const Grid& g, cx lambda, std::optional<double> support = std::nullopt) {
    std::vector<cx> v(g.n_points);
    for (std::size_t i = 0; i < g.n_points; ++i) v[i] = std::exp(-lambda * g.t(i));
    return SampledFn(g, std::move(v), support);
}

/// Left shift: f_u(t) = f(u + t); support shrinks accordingly (u grid-aligned).
inline SampledFn shift_left(const SampledFn& f, double u) {
    std::size_t iu = f.grid.index_of(u);
    std::vector<cx> v(f.grid.n_points, cx{0.0, 0.0});
    for (std::size_t i = 0; i + iu < f.grid.n_points; ++i) v[i] = f.values[i + iu];
    std::optional<double> supp;
    if (f.support_end) supp = std::max(0.0, *f.support_end - u);
    return SampledFn(f.grid, std::move(v), supp);
}

}  // namespace convsemi
