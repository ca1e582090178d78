#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "convsemi/generator.hpp"

using namespace convsemi;

namespace {
Generator nilpotent2() {
    MatrixXcd A(2, 2);
    A << cx{0, 0}, cx{1, 0}, cx{0, 0}, cx{0, 0};
    return Generator::dense(A);
}
}  // namespace

TEST_CASE("generator construction guards") {
    CHECK_THROWS_AS(Generator::dense(MatrixXcd::Zero(2, 3)), std::invalid_argument);
    MatrixXcd bad = MatrixXcd::Zero(2, 2);
    bad(0, 0) = cx{std::numeric_limits<double>::infinity(), 0.0};
    CHECK_THROWS_AS(Generator::dense(bad), std::invalid_argument);
    CHECK_THROWS_AS(Generator::diagonal(VectorXcd()), std::invalid_argument);
    CHECK_THROWS_AS(Generator::dirichlet_spectral(0, -1), std::invalid_argument);
    CHECK_THROWS_AS(Generator::dirichlet_spectral(4, 2), std::invalid_argument);
}

TEST_CASE("semigroup_apply: nilpotent matrix is affine in t") {
    Generator A = nilpotent2();
    VectorXcd x(2);
    x << cx{0, 0}, cx{1, 0};
    VectorXcd y = semigroup_apply(A, 2.0, x);
    CHECK(std::abs(y[0] - cx{2.0, 0.0}) < 1e-14);
    CHECK(std::abs(y[1] - cx{1.0, 0.0}) < 1e-14);
    CHECK_THROWS_AS(semigroup_apply(A, -0.5, x), std::domain_error);
}

TEST_CASE("semigroup_apply: scalar decay") {
    Generator A = Generator::diagonal((VectorXcd(1) << cx{-1.0, 0.0}).finished());
    VectorXcd x(1);
    x << cx{1.0, 0.0};
    VectorXcd y = semigroup_apply(A, 1.0, x);
    CHECK(std::abs(y[0] - cx{std::exp(-1.0), 0.0}) < 1e-15);
}

TEST_CASE("generator_apply basics") {
    Generator A = nilpotent2();
    VectorXcd x(2);
    x << cx{0, 0}, cx{1, 0};
    VectorXcd y = generator_apply(A, x);
    CHECK(std::abs(y[0] - cx{1.0, 0.0}) == 0.0);
    CHECK(std::abs(y[1]) == 0.0);
    VectorXcd wrong(3);
    wrong.setZero();
    CHECK_THROWS_AS(generator_apply(A, wrong), std::invalid_argument);

    Generator D = Generator::diagonal((VectorXcd(1) << cx{-1.0, 0.0}).finished());
    VectorXcd z(1);
    z << cx{3.0, 0.0};
    CHECK(std::abs(generator_apply(D, z)[0] - cx{-3.0, 0.0}) == 0.0);
}

TEST_CASE("semigroup law under composition") {
    MatrixXcd M(2, 2);
    M << cx{-0.3, 0.2}, cx{0.7, 0.0}, cx{-0.1, 0.0}, cx{0.1, -0.4};
    Generator A = Generator::dense(M);
    VectorXcd x(2);
    x << cx{1.0, -0.5}, cx{0.25, 0.75};
    VectorXcd two_steps = semigroup_apply(A, 0.6, semigroup_apply(A, 0.9, x));
    VectorXcd one_step = semigroup_apply(A, 1.5, x);
    CHECK((two_steps - one_step).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("derivative of the semigroup at zero recovers the generator") {
    MatrixXcd M(2, 2);
    M << cx{-0.3, 0.2}, cx{0.7, 0.0}, cx{-0.1, 0.0}, cx{0.1, -0.4};
    Generator A = Generator::dense(M);
    VectorXcd x(2);
    x << cx{1.0, 0.0}, cx{-1.0, 0.5};
    double h = 1e-5;
    VectorXcd fd = (semigroup_apply(A, h, x) - semigroup_apply(A, 0.0, x)) / h;
    // central at 0 is not available (t >= 0), use a one-sided second-order stencil
    VectorXcd fd2 =
        (-3.0 * semigroup_apply(A, 0.0, x) + 4.0 * semigroup_apply(A, h, x) - semigroup_apply(A, 2 * h, x)) /
        (2.0 * h);
    CHECK((fd2 - generator_apply(A, x)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((fd - generator_apply(A, x)).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("lsquare sequence: closed-form eigenvalues") {
    Generator G1 = build_lsquare_sequence(1.0, 1);
    cx a1 = G1.eigenvalues()[0];
    CHECK(a1.real() == Catch::Approx(1.0));
    CHECK(a1.imag() == Catch::Approx(std::sqrt(std::exp(2.0) - 1.0)).epsilon(1e-12));
    CHECK(a1.imag() == Catch::Approx(2.527658).margin(1e-5));

    Generator G2 = build_lsquare_sequence(2.0, 1);
    CHECK(G2.eigenvalues()[0].real() == Catch::Approx(0.5));

    // a_2 for T=1: 2 + i sqrt((e^2/2)^2 - 4)
    Generator G3 = build_lsquare_sequence(1.0, 2);
    cx a2 = G3.eigenvalues()[1];
    double g2 = std::exp(2.0) / 2.0;
    CHECK(a2.real() == Catch::Approx(2.0));
    CHECK(a2.imag() == Catch::Approx(std::sqrt(g2 * g2 - 4.0)).epsilon(1e-12));
    CHECK(a2.imag() == Catch::Approx(3.106).margin(1e-3));

    // real parts strictly increasing in m
    Generator G8 = build_lsquare_sequence(0.7, 8);
    VectorXcd a = G8.eigenvalues();
    for (Eigen::Index m = 1; m < a.size(); ++m) CHECK(a[m].real() > a[m - 1].real());
}

TEST_CASE("lsquare sequence: |e^{a_m t}| = e^{m t / T} exactly") {
    Generator G = build_lsquare_sequence(1.0, 4);
    VectorXcd a = G.eigenvalues();
    for (Eigen::Index m = 0; m < a.size(); ++m) {
        double t = 0.5;
        double mag = std::abs(std::exp(a[m] * t));
        CHECK(mag == Catch::Approx(std::exp((m + 1) * t)).epsilon(1e-12));
    }
}

TEST_CASE("dirichlet spectrum") {
    Generator G = Generator::dirichlet_spectral(4, -1);
    VectorXcd a = G.eigenvalues();
    REQUIRE(a.size() == 4);
    CHECK(a[0] == cx{-1.0, 0.0});
    CHECK(a[3] == cx{-16.0, 0.0});
}
