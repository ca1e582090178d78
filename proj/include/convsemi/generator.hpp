#pragma once

#include <cmath>
#include <stdexcept>
#include <variant>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "convsemi/grid.hpp"

namespace convsemi {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

struct DenseMatrixGen {
    MatrixXcd A;
};

/// Multiplication operator on a truncated sequence space: x_m -> a_m x_m.
struct DiagonalSequenceGen {
    VectorXcd a;
};

/// Dirichlet-Laplacian spectrum truncated to M modes: eigenvalues sign * m^2.
struct DirichletSpectralGen {
    int modes;
    int sign;  // +1 or -1
};

/// The operator A of the Cauchy problem, in one of three finite-dimensional
/// backends. Immutable after construction.
class Generator {
  public:
    using Variant = std::variant<DenseMatrixGen, DiagonalSequenceGen, DirichletSpectralGen>;

    static Generator dense(MatrixXcd A) {
        if (A.rows() != A.cols() || A.rows() == 0)
            throw std::invalid_argument("Generator: dense matrix must be square and nonempty");
        if (!A.allFinite()) throw std::invalid_argument("Generator: dense matrix entries must be finite");
        return Generator(DenseMatrixGen{std::move(A)});
    }
    static Generator diagonal(VectorXcd a) {
        if (a.size() == 0) throw std::invalid_argument("Generator: empty diagonal");
        return Generator(DiagonalSequenceGen{std::move(a)});
    }
    static Generator dirichlet_spectral(int modes, int sign) {
        if (modes < 1) throw std::invalid_argument("Generator: modes must be >= 1");
        if (sign != 1 && sign != -1) throw std::invalid_argument("Generator: sign must be +-1");
        return Generator(DirichletSpectralGen{modes, sign});
    }

    Eigen::Index dim() const {
        if (const auto* d = std::get_if<DenseMatrixGen>(&v_)) return d->A.rows();
        if (const auto* d = std::get_if<DiagonalSequenceGen>(&v_)) return d->a.size();
        return std::get<DirichletSpectralGen>(v_).modes;
    }

    bool is_diagonal() const { return !std::holds_alternative<DenseMatrixGen>(v_); }

    /// Eigenvalues of the diagonal backends.
    VectorXcd eigenvalues() const {
        if (const auto* d = std::get_if<DiagonalSequenceGen>(&v_)) return d->a;
        if (const auto* d = std::get_if<DirichletSpectralGen>(&v_)) {
            VectorXcd a(d->modes);
            for (int m = 1; m <= d->modes; ++m)
                a[m - 1] = cx{static_cast<double>(d->sign) * m * m, 0.0};
            return a;
        }
        throw std::domain_error("Generator: dense backend has no stored spectrum");
    }

    MatrixXcd matrix() const {
        if (const auto* d = std::get_if<DenseMatrixGen>(&v_)) return d->A;
        return eigenvalues().asDiagonal();
    }

    VectorXcd apply(const VectorXcd& x) const {
        if (x.size() != dim()) throw std::invalid_argument("Generator: dimension mismatch");
        if (const auto* d = std::get_if<DenseMatrixGen>(&v_)) return d->A * x;
        return eigenvalues().cwiseProduct(x);
    }

    /// e^{tA}: scaling-and-squaring matrix exponential for the dense backend,
    /// componentwise e^{a_m t} for the diagonal ones.
    MatrixXcd exp_at(double t) const {
        if (const auto* d = std::get_if<DenseMatrixGen>(&v_)) return (t * d->A).exp();
        VectorXcd a = eigenvalues();
        VectorXcd e(a.size());
        for (Eigen::Index i = 0; i < a.size(); ++i) e[i] = std::exp(a[i] * t);
        return MatrixXcd(e.asDiagonal());
    }

    bool same_operator(const Generator& o) const {
        return dim() == o.dim() && matrix() == o.matrix();
    }

  private:
    explicit Generator(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

inline VectorXcd generator_apply(const Generator& A, const VectorXcd& x) { return A.apply(x); }

inline VectorXcd semigroup_apply(const Generator& A, double t, const VectorXcd& x) {
    if (t < 0.0) throw std::domain_error("semigroup_apply: requires t >= 0");
    if (x.size() != A.dim()) throw std::invalid_argument("semigroup_apply: dimension mismatch");
    return A.exp_at(t) * x;
}

/// The truncated multiplication sequence a_m = m/T + i sqrt((e^m/m)^2 - (m/T)^2),
/// whose 1-times integrated family blows up at t = T.
inline Generator build_lsquare_sequence(double T, int modes) {
    if (!(T > 0.0)) throw std::invalid_argument("build_lsquare_sequence: T must be positive");
    if (modes < 1) throw std::invalid_argument("build_lsquare_sequence: modes must be >= 1");
    VectorXcd a(modes);
    for (int m = 1; m <= modes; ++m) {
        double re = m / T;
        double growth = std::exp(static_cast<double>(m)) / m;
        double rad = growth * growth - re * re;
        if (rad < 0.0)
            throw std::domain_error("build_lsquare_sequence: (e^m/m)^2 < (m/T)^2 at m=" +
                                    std::to_string(m));
        a[m - 1] = cx{re, std::sqrt(rad)};
    }
    return Generator::diagonal(std::move(a));
}

}  // namespace convsemi
