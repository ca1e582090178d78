#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "convsemi/convolution.hpp"
#include "convsemi/kernel.hpp"

using namespace convsemi;

namespace {
SampledFn chi_upto(const Grid& g, double b) {
    // chi_[0,b] sampled at full value including the endpoint node
    std::vector<cx> v(g.n_points, cx{0.0, 0.0});
    for (std::size_t i = 0; i < g.n_points; ++i)
        if (g.t(i) <= b + 1e-12) v[i] = 1.0;
    return SampledFn(g, std::move(v), b);
}
}  // namespace

TEST_CASE("grid invariants") {
    CHECK_THROWS_AS(Grid(0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(Grid(-1e-3, 10), std::invalid_argument);
    CHECK_THROWS_AS(Grid(1e-3, 1), std::invalid_argument);
    Grid g(0.25, 9);
    CHECK(g.horizon() == Catch::Approx(2.0));
    CHECK(g.index_of(1.0) == 4);
    CHECK_THROWS_AS(g.index_of(1.1), std::domain_error);
    CHECK_THROWS_AS(g.index_of(3.0), std::domain_error);
}

TEST_CASE("convolve: heaviside squared is t") {
    Grid g(1e-3, 1501);
    SampledFn chi = Kernel::heaviside().sample(g);
    SampledFn c = convolve(chi, chi);
    CHECK(std::abs(c[g.index_of(1.0)] - cx{1.0, 0.0}) < 1e-13);
    CHECK(std::abs(c[g.index_of(1.5)] - cx{1.5, 0.0}) < 1e-13);
}

TEST_CASE("convolve: grid mismatch is a caller bug") {
    Grid g1(1e-2, 101), g2(1e-2, 102);
    SampledFn a = Kernel::heaviside().sample(g1);
    SampledFn b = Kernel::heaviside().sample(g2);
    CHECK_THROWS_AS(convolve(a, b), std::invalid_argument);
}

TEST_CASE("convolve: fractional semigroup j_1/2 * j_1/2 = 1") {
    Grid g(1e-3, 1001);
    SampledFn j = Kernel::fractional_j(0.5).sample(g);
    SampledFn c = convolve(j, j);
    // sampled-data trapezoid on a doubly singular product: low-order but convergent
    CHECK(std::abs(c[g.index_of(0.7)] - cx{1.0, 0.0}) < 2e-2);
    // the closed-form power route is exact
    SampledFn p = conv_power(Kernel::fractional_j(0.5), 2, g);
    CHECK(std::abs(p[g.index_of(0.7)] - cx{1.0, 0.0}) < 1e-14);
}

TEST_CASE("convolve: exponential pair against closed form and quadrature oracle") {
    Grid g(5e-4, 4001);
    SampledFn e1 = exp_decay(g, cx{1.0, 0.0});
    SampledFn c = convolve(e1, e1);
    double t = 1.0;
    // closed form (e_1 * e_1)(t) = t e^{-t}
    CHECK(std::abs(c[g.index_of(t)] - cx{t * std::exp(-t), 0.0}) < 1e-8);
    // independent fine-grid oracle
    double oracle = adaptive_simpson([&](double s) { return std::exp(-(t - s)) * std::exp(-s); }, 0.0, t);
    CHECK(std::abs(c[g.index_of(t)] - cx{oracle, 0.0}) < 1e-8);
    CHECK(oracle == Catch::Approx(0.36787944117144233).epsilon(1e-12));
}

TEST_CASE("convolve: commutativity to roundoff, associativity to O(dt^2)") {
    Grid g(2e-3, 801);
    SampledFn f = sample_function(g, [](double t) { return std::exp(-t) * (1.0 + t); });
    SampledFn h = sample_function(g, [](double t) { return std::sin(t) + 2.0; });
    SampledFn k = sample_function(g, [](double t) { return 1.0 / (1.0 + t); });
    CHECK(max_abs_diff(convolve(f, h), convolve(h, f)) < 1e-13);

    SampledFn lhs = convolve(convolve(f, h), k);
    SampledFn rhs = convolve(f, convolve(h, k));
    CHECK(max_abs_diff(lhs, rhs) < 10.0 * g.dt * g.dt);
}

TEST_CASE("convolve: support law") {
    Grid g(1e-2, 401);
    SampledFn f = sample_function(g, [](double t) { return t < 0.5 ? 1.0 - 2.0 * t : 0.0; }, 0.5);
    SampledFn h = sample_function(g, [](double t) { return t < 1.0 ? t : 0.0; }, 1.0);
    SampledFn c = convolve(f, h);
    REQUIRE(c.support_end.has_value());
    CHECK(*c.support_end == Catch::Approx(1.5));
    for (std::size_t i = 0; i < c.size(); ++i)
        if (g.t(i) > 1.5 + g.dt) CHECK(std::abs(c[i]) < 1e-14);
}

TEST_CASE("laplace multiplicativity on compactly supported factors") {
    Grid g(1e-3, 4001);
    SampledFn f = sample_function(
        g, [](double t) { return t < 1.0 ? t * (1.0 - t) : 0.0; }, 1.0);
    SampledFn h = sample_function(
        g, [](double t) { return t < 0.8 ? std::sin(M_PI * t / 0.8) : 0.0; }, 0.8);
    cx lambda{1.3, 0.4};
    cx lhs = laplace_numeric(convolve(f, h), lambda);
    cx rhs = laplace_numeric(f, lambda) * laplace_numeric(h, lambda);
    CHECK(std::abs(lhs - rhs) < 1e-7);
}

TEST_CASE("dual_convolve: truncation needs a support hint") {
    Grid g(1e-2, 201);
    SampledFn chi = Kernel::heaviside().sample(g);
    CHECK_THROWS_AS(dual_convolve(chi, chi), std::invalid_argument);
}

TEST_CASE("dual_convolve: chi against indicator") {
    Grid g(1e-2, 201);
    SampledFn chi = Kernel::heaviside().sample(g);
    SampledFn ind = chi_upto(g, 1.0);
    SampledFn d = dual_convolve(chi, ind);
    // (chi o chi_[0,1])(t) = 1 - t on [0,1]
    CHECK(std::abs(d[g.index_of(0.25)] - cx{0.75, 0.0}) < 1e-12);
    CHECK(std::abs(d[g.index_of(0.9)] - cx{0.1, 0.0}) < 1e-12);
    REQUIRE(d.support_end.has_value());
    for (std::size_t i = 0; i < d.size(); ++i)
        if (g.t(i) > 1.0 + 1e-9) CHECK(std::abs(d[i]) == 0.0);
}

TEST_CASE("dual_convolve: value at zero is the full integral of the factor") {
    Grid g(1e-3, 1201);
    SampledFn bump = sample_function(
        g, [](double t) { return (t > 0.2 && t < 1.0) ? std::exp(-1.0 / ((t - 0.2) * (1.0 - t))) : 0.0; },
        1.0);
    SampledFn j1 = Kernel::heaviside().sample(g);
    SampledFn d = dual_convolve(j1, bump);
    double oracle = adaptive_simpson(
        [](double t) { return (t > 0.2 && t < 1.0) ? std::exp(-1.0 / ((t - 0.2) * (1.0 - t))) : 0.0; },
        0.2, 1.0, 1e-14);
    CHECK(std::abs(d[0] - cx{oracle, 0.0}) < 1e-8);
}

TEST_CASE("dual convolution of an exponential reproduces the transform (Laplace eigenfunction)") {
    Grid g(1e-3, 40001);
    SampledFn chi = Kernel::heaviside().sample(g);
    SampledFn e1 = exp_decay(g, cx{1.0, 0.0}, g.horizon());
    SampledFn d = dual_convolve(chi, e1);
    // chi o e_{-1} = chihat(1) e_{-1} = e_{-1}, away from the truncation end
    double worst = 0.0;
    for (std::size_t i = 0; i < g.n_points && g.t(i) <= 20.0; ++i)
        worst = std::max(worst, std::abs(d[i] - e1[i]));
    CHECK(worst < 1e-7);
}

TEST_CASE("cumulative: running integral basics") {
    Grid g(1e-3, 3201);
    SampledFn chi = Kernel::heaviside().sample(g);
    SampledFn K = cumulative(chi);
    CHECK(std::abs(K[0]) == 0.0);
    CHECK(std::abs(K[g.index_of(3.0)] - cx{3.0, 0.0}) < 1e-12);

    SampledFn anyf = sample_function(g, [](double t) { return std::cos(3.0 * t); });
    CHECK(std::abs(cumulative(anyf)[0]) == 0.0);
}

TEST_CASE("cumulative of the singular kernel: kernel-aware path is exact") {
    Grid g(1e-3, 1001);
    SampledFn K = kernel_cumulative(Kernel::fractional_j(0.5), g);
    // int_0^1 j_{1/2} = 2/sqrt(pi)
    double expected = 2.0 / std::sqrt(M_PI);
    CHECK(std::abs(K[g.index_of(1.0)] - cx{expected, 0.0}) < 1e-12);
    // the plain sampled route converges but at reduced order
    SampledFn Kp = cumulative(Kernel::fractional_j(0.5).sample(g));
    CHECK(std::abs(Kp[g.index_of(1.0)] - cx{expected, 0.0}) < 2e-2);
}

TEST_CASE("laplace_numeric: closed forms") {
    SECTION("heaviside at lambda=1 over a long horizon") {
        Grid g(2e-5, 2000001);
        SampledFn chi = Kernel::heaviside().sample(g);
        CHECK(std::abs(laplace_numeric(chi, cx{1.0, 0.0}) - cx{1.0, 0.0}) < 1e-10);
    }
    SECTION("exponential at lambda=3") {
        Grid g(1e-3, 10001);
        SampledFn e2 = exp_decay(g, cx{2.0, 0.0});
        CHECK(std::abs(laplace_numeric(e2, cx{3.0, 0.0}) - cx{0.2, 0.0}) < 1e-6);
    }
    SECTION("heat boundary kernel reproduces e^{-sqrt(lambda)}") {
        Grid g(1e-2, 4001);
        SampledFn hb = Kernel::heat_boundary(1.0).sample(g);
        CHECK(std::abs(laplace_numeric(hb, cx{1.0, 0.0}) - cx{std::exp(-1.0), 0.0}) < 1e-4);
        CHECK(std::abs(laplace_numeric(hb, cx{4.0, 0.0}) - cx{std::exp(-2.0), 0.0}) < 1e-4);
    }
}

TEST_CASE("laplace_with_tail: the reported bound dominates the truncated mass") {
    Grid g_short(1e-3, 10001), g_long(1e-3, 30001);
    SampledFn f_s = exp_decay(g_short, cx{0.5, 0.0});
    SampledFn f_l = exp_decay(g_long, cx{0.5, 0.0});
    cx lambda{1.0, 0.0};
    auto r = laplace_with_tail(f_s, lambda, 1.0, -0.4);  // strict envelope
    REQUIRE(r.tail_bound.has_value());
    double actual_tail = std::abs(laplace_numeric(f_l, lambda) - r.value);
    CHECK(actual_tail <= *r.tail_bound + 1e-15);
}

TEST_CASE("quadrature order: halving dt cuts smooth convolution error ~4x") {
    auto run = [](double dt) {
        Grid g(dt, static_cast<std::size_t>(std::llround(1.6 / dt)) + 1);
        SampledFn f = sample_function(g, [](double t) { return std::exp(-0.7 * t) * (t + 0.3); });
        SampledFn h = sample_function(g, [](double t) { return std::cos(2.0 * t); });
        SampledFn c = convolve(f, h);
        double t = 1.5;
        double oracle = adaptive_simpson(
            [&](double s) { return std::exp(-0.7 * (t - s)) * ((t - s) + 0.3) * std::cos(2.0 * s); }, 0.0,
            t, 1e-15);
        return std::abs(c[g.index_of(t)] - cx{oracle, 0.0});
    };
    double e1 = run(2e-3), e2 = run(1e-3);
    CHECK(e1 / e2 > 3.5);
    CHECK(e1 / e2 < 4.5);
}

TEST_CASE("simpson weights integrate cubics exactly") {
    for (std::size_t m : {2u, 3u, 5u, 8u, 11u}) {
        double dt = 0.1;
        auto w = simpson_weights(m);
        double acc = 0.0;
        for (std::size_t i = 0; i <= m; ++i) {
            double t = i * dt;
            acc += w[i] * (t * t * t - 2.0 * t * t + 0.5);
        }
        acc *= dt;
        double T = m * dt;
        double exact = T * T * T * T / 4.0 - 2.0 * T * T * T / 3.0 + 0.5 * T;
        CHECK(acc == Catch::Approx(exact).margin(1e-14));
    }
}

TEST_CASE("kernel product rule: singular convolution at second order") {
    // int_0^t j_{1/2}(t-s) g(s) ds for smooth g, against an adaptive oracle
    auto run = [](double dt) {
        Grid g(dt, static_cast<std::size_t>(std::llround(1.0 / dt)) + 1);
        KernelRule rule = make_kernel_rule(Kernel::fractional_j(0.5), g);
        std::vector<cx> smooth(g.n_points);
        for (std::size_t i = 0; i < g.n_points; ++i) smooth[i] = std::cos(2.0 * g.t(i));
        double t = 1.0;
        // substitute u = v^2 to remove the endpoint singularity from the oracle
        double oracle = 2.0 / std::tgamma(0.5) *
                        adaptive_simpson([&](double v) { return std::cos(2.0 * (t - v * v)); }, 0.0,
                                         std::sqrt(t), 1e-14);
        return std::abs(rule.conv_at(smooth, g.index_of(t)) - cx{oracle, 0.0});
    };
    double e1 = run(2e-3), e2 = run(1e-3);
    CHECK(e2 < 1e-5);
    CHECK(e1 / e2 > 3.0);  // near second order despite the singular kernel
}

TEST_CASE("support hints: declared-zero scan helper") {
    Grid g(1e-2, 101);
    SampledFn good = sample_function(g, [](double t) { return t < 0.5 ? 1.0 : 0.0; }, 0.5);
    CHECK(good.support_violation() == 0.0);
    SampledFn bad = sample_function(g, [](double) { return 1.0; }, 0.5);
    CHECK(bad.support_violation() == 1.0);
}
