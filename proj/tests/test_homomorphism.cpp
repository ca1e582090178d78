#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "convsemi/homomorphism.hpp"

using namespace convsemi;

namespace {

Generator decay1() { return Generator::diagonal((VectorXcd(1) << cx{-1.0, 0.0}).finished()); }

Generator nilpotent2() {
    MatrixXcd A(2, 2);
    A << cx{0, 0}, cx{1, 0}, cx{0, 0}, cx{0, 0};
    return Generator::dense(A);
}

// int f(t) e^{-t} dt computed directly from the element's sampled f
cx weighted_integral_oracle(const DkElement& e, const Grid& g) {
    std::vector<cx> v(g.n_points);
    for (std::size_t i = 0; i < g.n_points; ++i) v[i] = e.f[i] * std::exp(-g.t(i));
    return trapezoid(v, 0, g.n_points - 1, g.dt);
}

struct Fixture {
    Grid grid{1e-3, 4301};
    HomomorphismContext ctx;
    Fixture() : ctx(HomomorphismContext::make(decay1(), Kernel::heaviside(), 1.0, grid, 4)) {}
};

}  // namespace

TEST_CASE_METHOD(Fixture, "gk_apply matches the weighted-integral oracle for A = -1, k = chi") {
    TestFunction h({cx{1.0, 0.0}, cx{0.5, 0.0}}, 0.8);
    DkElement e = make_element(ctx, h, 2);
    VectorXcd x = (VectorXcd(1) << cx{1.0, 0.0}).finished();
    VectorXcd Gx = gk_apply(ctx, e, x);
    cx oracle = weighted_integral_oracle(e, grid);
    CHECK(std::abs(Gx[0] - oracle) < 1e-6);
}

TEST_CASE_METHOD(Fixture, "gk_apply of the zero element is zero") {
    TestFunction zero({cx{0.0, 0.0}}, 0.5);
    DkElement e = make_element(ctx, zero, 2);
    VectorXcd x = (VectorXcd(1) << cx{1.0, 0.0}).finished();
    CHECK(gk_apply(ctx, e, x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE_METHOD(Fixture, "gk_apply guards: ladder depth and witness depth") {
    TestFunction wide({cx{1.0, 0.0}}, 3.9);  // needs level 4, witness depth only 2
    DkElement e = make_element(ctx, wide, 2);
    VectorXcd x = (VectorXcd(1) << cx{1.0, 0.0}).finished();
    CHECK_THROWS_AS(gk_apply(ctx, e, x), std::domain_error);
    TestFunction h({cx{1.0, 0.0}}, 0.5);
    DkElement ok = make_element(ctx, h, 2);
    CHECK_THROWS_AS(gk_apply(ctx, ok, x, 5), std::domain_error);  // beyond the built ladder
}

TEST_CASE_METHOD(Fixture, "well-definedness across ladder depth") {
    TestFunction h({cx{1.0, 0.0}, cx{0.5, 0.0}}, 0.8);
    DkElement e = make_element(ctx, h, 3);
    VectorXcd x = (VectorXcd(1) << cx{1.0, 0.0}).finished();
    ResidualReport r = gk_welldefinedness_residual(ctx, e, x, 1e-6);
    INFO("level gap " << r.max_abs_residual);
    CHECK(r.passed);
}

TEST_CASE_METHOD(Fixture, "multiplicativity against the product oracle") {
    TestFunction hf({cx{1.0, 0.0}, cx{0.5, 0.0}}, 0.8);
    TestFunction hg({cx{0.7, 0.0}}, 0.6);
    DkElement fe = make_element(ctx, hf, 2);
    DkElement ge = make_element(ctx, hg, 2);
    VectorXcd x = (VectorXcd(1) << cx{1.0, 0.0}).finished();
    ResidualReport r = gk_multiplicativity_residual(ctx, fe, ge, x, 1e-6);
    INFO("multiplicativity residual " << r.max_abs_residual);
    CHECK(r.passed);
    CHECK(r.params.at("integer_route") == 1.0);
    // both sides also agree with (int f e^{-t})(int g e^{-t}) x
    cx oracle = weighted_integral_oracle(fe, grid) * weighted_integral_oracle(ge, grid);
    VectorXcd rhs = gk_apply(ctx, fe, gk_apply(ctx, ge, x));
    CHECK(std::abs(rhs[0] - oracle) < 1e-6);
}

TEST_CASE_METHOD(Fixture, "multiplicativity with a zero factor") {
    TestFunction hf({cx{1.0, 0.0}}, 0.8);
    TestFunction zero({cx{0.0, 0.0}}, 0.6);
    DkElement fe = make_element(ctx, hf, 2);
    DkElement ge = make_element(ctx, zero, 2);
    VectorXcd x = (VectorXcd(1) << cx{1.0, 0.0}).finished();
    ResidualReport r = gk_multiplicativity_residual(ctx, fe, ge, x, 1e-12);
    CHECK(r.max_abs_residual < 1e-12);
}

TEST_CASE("multiplicativity on the nilpotent backend") {
    Grid g(1e-3, 2401);
    HomomorphismContext ctx = HomomorphismContext::make(nilpotent2(), Kernel::heaviside(), 1.0, g, 2);
    TestFunction h({cx{1.0, 0.0}}, 0.7);
    DkElement e = make_element(ctx, h, 2);
    VectorXcd x = (VectorXcd(2) << cx{0.3, 0.0}, cx{1.0, 0.0}).finished();
    ResidualReport r = gk_multiplicativity_residual(ctx, e, e, x, 10.0 * g.dt * g.dt);
    INFO("residual " << r.max_abs_residual);
    CHECK(r.passed);
}

TEST_CASE_METHOD(Fixture, "generator action: A G(f) = -G(f') - f(0)") {
    TestFunction h({cx{1.0, 0.0}, cx{0.5, 0.0}}, 0.8);
    DkElement e = make_element(ctx, h, 2);
    VectorXcd x = (VectorXcd(1) << cx{1.0, 0.0}).finished();
    ResidualReport r = gk_generator_action_residual(ctx, e, x, 1e-6);
    INFO("generator action residual " << r.max_abs_residual);
    CHECK(r.passed);

    SECTION("zero vector is trivial") {
        ResidualReport r0 = gk_generator_action_residual(ctx, e, VectorXcd::Zero(1), 1e-14);
        CHECK(r0.max_abs_residual == 0.0);
    }
}

TEST_CASE("generator action with A = 0: G(f') cancels f(0)") {
    Grid g(1e-3, 4301);
    Generator zero_gen = Generator::dense(MatrixXcd::Zero(1, 1));
    HomomorphismContext ctx = HomomorphismContext::make(zero_gen, Kernel::heaviside(), 1.0, g, 3);
    // combine two elements so that f(0) = 0
    TestFunction h1({cx{1.0, 0.0}}, 0.8);
    TestFunction h2({cx{1.0, 0.0}}, 0.5);
    DkElement e1 = make_element(ctx, h1, 2);
    DkElement e2 = make_element(ctx, h2, 2);
    cx c = -e1.f[0] / e2.f[0];  // f = f1 + c f2 has f(0) = 0
    VectorXcd x = (VectorXcd(1) << cx{1.0, 0.0}).finished();
    // A = 0, so the identity reduces to G(f')x = -f(0)x = 0; combine by linearity
    SampledFn w1 = element_witness(ctx, e1, 1, 1);
    SampledFn w2 = element_witness(ctx, e2, 1, 1);
    const ConvolutedFamily& fam = ctx.level(1);
    VectorXcd gfp = VectorXcd::Zero(1);
    for (std::size_t i = 0; i <= fam.i_tau; ++i) {
        double tw = (i == 0 || i == fam.i_tau) ? 0.5 : 1.0;
        gfp += (tw * (w1[i] + c * w2[i])) * (fam.values[i] * x);
    }
    gfp *= g.dt;
    CHECK(gfp.cwiseAbs().maxCoeff() < 5.0 * g.dt * g.dt);
}

TEST_CASE_METHOD(Fixture, "corollary consistency G_{k*l} = G_k for k = l = chi") {
    HomomorphismContext ctx_kl =
        HomomorphismContext::make(decay1(), Kernel::fractional_j(2.0), 1.0, grid, 2);
    TestFunction h({cx{1.0, 0.0}, cx{0.5, 0.0}}, 0.8);
    VectorXcd x = (VectorXcd(1) << cx{1.0, 0.0}).finished();
    ResidualReport r = kl_consistency_residual(ctx, ctx_kl, Kernel::heaviside(), h, 2, x, 1e-5);
    INFO("consistency gap " << r.max_abs_residual);
    CHECK(r.passed);
}

TEST_CASE("corollary consistency with a fractional second kernel on the nilpotent backend") {
    Grid g(2e-3, 1301);
    HomomorphismContext ctx_k = HomomorphismContext::make(nilpotent2(), Kernel::heaviside(), 1.0, g, 2);
    HomomorphismContext ctx_kl =
        HomomorphismContext::make(nilpotent2(), Kernel::fractional_j(1.5), 1.0, g, 2);
    TestFunction h({cx{1.0, 0.0}}, 0.8);
    VectorXcd x = (VectorXcd(2) << cx{1.0, 0.0}, cx{0.5, 0.0}).finished();
    double c = std::pow(g.dt, 1.5);
    ResidualReport r =
        kl_consistency_residual(ctx_k, ctx_kl, Kernel::fractional_j(0.5), h, 2, x, 50.0 * c);
    INFO("gap " << r.max_abs_residual << " dt^1.5 " << c);
    CHECK(r.passed);
}

TEST_CASE_METHOD(Fixture, "kl consistency rejects mismatched generators") {
    HomomorphismContext other =
        HomomorphismContext::make(Generator::diagonal((VectorXcd(1) << cx{-2.0, 0.0}).finished()),
                                  Kernel::fractional_j(2.0), 1.0, grid, 2);
    TestFunction h({cx{1.0, 0.0}}, 0.5);
    VectorXcd x = (VectorXcd(1) << cx{1.0, 0.0}).finished();
    CHECK_THROWS_AS(kl_consistency_residual(ctx, other, Kernel::heaviside(), h, 2, x, 1e-5),
                    std::invalid_argument);
}

TEST_CASE_METHOD(Fixture, "kds non-degeneracy with staggered probes") {
    std::vector<DkElement> probes;
    for (double b : {0.4, 0.6, 0.8})
        probes.push_back(make_element(ctx, TestFunction({cx{1.0, 0.0}}, b), 2));
    ResidualReport r = kds_nondegeneracy_check(ctx, probes);
    CHECK(r.passed);
    CHECK(r.params.at("smin") > 0.0);
    CHECK_THROWS_AS(kds_nondegeneracy_check(ctx, {}), std::invalid_argument);
}

TEST_CASE("kds: single invertible probe and duplicated probes") {
    Grid g(2e-3, 1301);
    HomomorphismContext ctx = HomomorphismContext::make(nilpotent2(), Kernel::heaviside(), 1.0, g, 2);
    DkElement e = make_element(ctx, TestFunction({cx{1.0, 0.0}}, 0.7), 2);
    MatrixXcd G = gk_matrix(ctx, e);
    Eigen::JacobiSVD<MatrixXcd> svd(G);
    REQUIRE(svd.singularValues().minCoeff() > 1e-6);  // invertible probe
    ResidualReport single = kds_nondegeneracy_check(ctx, {e});
    CHECK(single.passed);
    // duplicating the probe scales the singular values by sqrt(2), rank unchanged
    ResidualReport dup = kds_nondegeneracy_check(ctx, {e, e});
    CHECK(dup.params.at("smin") ==
          Catch::Approx(std::sqrt(2.0) * single.params.at("smin")).epsilon(1e-10));
}

TEST_CASE_METHOD(Fixture, "linearity is exact through the combined witness") {
    TestFunction h1({cx{1.0, 0.0}}, 0.8);
    TestFunction h2({cx{0.0, 1.0}, cx{0.4, 0.0}}, 0.6);
    DkElement e1 = make_element(ctx, h1, 2);
    DkElement e2 = make_element(ctx, h2, 2);
    VectorXcd x = (VectorXcd(1) << cx{1.0, -0.5}).finished();
    cx a{0.7, 0.1}, b{-1.2, 0.4};
    VectorXcd combined = a * gk_apply(ctx, e1, x, 2) + b * gk_apply(ctx, e2, x, 2);
    SampledFn w1 = element_witness(ctx, e1, 2);
    SampledFn w2 = element_witness(ctx, e2, 2);
    const ConvolutedFamily& fam = ctx.level(2);
    VectorXcd direct = VectorXcd::Zero(1);
    for (std::size_t i = 0; i <= fam.i_tau; ++i) {
        double tw = (i == 0 || i == fam.i_tau) ? 0.5 : 1.0;
        direct += (tw * (a * w1[i] + b * w2[i])) * (fam.values[i] * x);
    }
    direct *= grid.dt;
    CHECK((combined - direct).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("commutation of G values on the nilpotent backend") {
    Grid g(2e-3, 1301);
    HomomorphismContext ctx = HomomorphismContext::make(nilpotent2(), Kernel::heaviside(), 1.0, g, 2);
    DkElement e1 = make_element(ctx, TestFunction({cx{1.0, 0.0}}, 0.7), 2);
    DkElement e2 = make_element(ctx, TestFunction({cx{0.5, 0.0}, cx{1.0, 0.0}}, 0.5), 2);
    MatrixXcd G1 = gk_matrix(ctx, e1);
    MatrixXcd G2 = gk_matrix(ctx, e2);
    CHECK((G1 * G2 - G2 * G1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE_METHOD(Fixture, "computed bound dominates the attained norm") {
    for (double b : {0.3, 0.6, 0.9}) {
        DkElement e = make_element(ctx, TestFunction({cx{1.0, 0.0}, cx{-0.2, 0.3}}, b), 2);
        VectorXcd x = (VectorXcd(1) << cx{0.8, 0.3}).finished();
        CHECK(gk_bound_slack(ctx, e, x) >= -1e-12);
    }
}

TEST_CASE("homomorphism over a fractional kernel (half-order ladder)") {
    Grid g(2e-3, 2301);
    HomomorphismContext ctx =
        HomomorphismContext::make(decay1(), Kernel::fractional_j(0.5), 1.0, g, 4);
    TestFunction h({cx{1.0, 0.0}}, 0.7);
    DkElement e = make_element(ctx, h, 4);
    VectorXcd x = (VectorXcd(1) << cx{1.0, 0.0}).finished();

    ResidualReport wd = gk_welldefinedness_residual(ctx, e, x, 2e-4);
    INFO("well-definedness " << wd.max_abs_residual);
    CHECK(wd.passed);

    ResidualReport ga = gk_generator_action_residual(ctx, e, x, 2e-4);
    INFO("generator action " << ga.max_abs_residual);
    CHECK(ga.passed);

    // 2n * alpha = 1 is an integer power, so the derivative route applies
    DkElement e2 = make_element(ctx, TestFunction({cx{0.5, 0.0}}, 0.5), 4);
    ResidualReport mu = gk_multiplicativity_residual(ctx, e, e2, x, 2e-4);
    INFO("multiplicativity " << mu.max_abs_residual);
    CHECK(mu.passed);
    CHECK(mu.params.at("integer_route") == 1.0);
}
