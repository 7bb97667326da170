#pragma once

#include "iprior/common.hpp"

#include <string>
#include <vector>

namespace iprior {

/// Inner product on the covariate space.
///
/// Every variant is an ordinary dot product after a linear feature map
/// (`features`): Sobolev takes first differences scaled by 1/sqrt(spacing),
/// Mahalanobis multiplies by the Cholesky factor of M.
class Metric {
public:
    enum class Kind { euclidean, sobolev, mahalanobis };

    static Metric euclidean();
    /// Curves sampled on a uniform grid; <x,x'> = sum dx_k dx'_k / spacing.
    static Metric sobolev(double spacing);
    /// <x,x'> = x^T M x'. M must be symmetric positive definite.
    static Metric mahalanobis(Matrix m);

    Kind kind() const { return kind_; }
    double spacing() const { return spacing_; }
    const Matrix& matrix() const { return m_; }

    double inner(const Vector& x, const Vector& xp) const;
    double norm(const Vector& x) const;

    /// Row-wise feature map: dot products of rows of the result equal
    /// metric inner products of rows of `rows`.
    Matrix features(const Matrix& rows) const;

    /// Throws ValidationError if a row of width `dim` cannot be measured.
    void check_dimension(Index dim) const;

    std::string name() const;

private:
    Kind kind_ = Kind::euclidean;
    double spacing_ = 1.0;
    Matrix m_;
    Matrix factor_;  // lower Cholesky factor of m_
};

double inner_product(const Vector& x, const Vector& xp, const Metric& metric);

enum class KernelKind { canonical, fbm, sqexp };

/// A positive-definite kernel over the covariate space: canonical (linear),
/// fractional Brownian motion with Hurst coefficient gamma, or
/// squared exponential exp(-|x-x'|^{2 xi} / (2 sigma^2)). Optionally
/// centered, possibly repeatedly, with respect to sets of anchor points.
///
/// Points are passed as rows of a matrix. Kernels are immutable values.
class Kernel {
public:
    /// Canonical kernel under the Euclidean metric.
    Kernel() = default;

    static Kernel canonical(Metric metric = Metric::euclidean());
    static Kernel fbm(double gamma, Metric metric = Metric::euclidean());
    static Kernel sqexp(double sigma, double xi = 1.0, Metric metric = Metric::euclidean());

    /// h_c(x,x') = h(x,x') - mean_i h(x,a_i) - mean_j h(x',a_j) + mean_ij h(a_i,a_j).
    Kernel centered(const Matrix& anchors) const;

    KernelKind kind() const { return kind_; }
    double gamma() const { return gamma_; }
    double sigma() const { return sigma_; }
    double xi() const { return xi_; }
    const Metric& metric() const { return metric_; }

    bool is_centered() const { return !layers_.empty(); }
    /// Anchor sets, innermost first.
    std::vector<Matrix> anchor_sets() const;
    /// The kernel with all centering layers removed.
    Kernel uncentered() const;

    double operator()(const Vector& x, const Vector& xp) const;

    /// |a| x |b| matrix of kernel values between rows of a and rows of b.
    Matrix cross(const Matrix& a, const Matrix& b) const;

    std::string describe() const;

private:
    struct Layer {
        Matrix anchors;
        Matrix anchor_features;
        double grand_mean = 0.0;
    };

    Matrix base_cross(const Matrix& fa, const Matrix& fb) const;
    Matrix cross_at_depth(const Matrix& fa, const Matrix& fb, std::size_t depth) const;

    KernelKind kind_ = KernelKind::canonical;
    double gamma_ = 1.0;
    double sigma_ = 1.0;
    double xi_ = 1.0;
    Metric metric_;
    std::vector<Layer> layers_;
};

/// Convenience wrapper for center_kernel.
Kernel center_kernel(const Kernel& kernel, const Matrix& anchors);

/// Symmetric Gram matrix with its eigendecomposition. Eigenvalues that
/// come out negative from round-off are floored at zero: when the smallest
/// raw eigenvalue is negative, every eigenvalue below 1e-12 * largest is
/// set to zero and the matrix is recomposed.
struct GramMatrix {
    Matrix values;
    Vector eigenvalues;   // ascending, after flooring
    Matrix eigenvectors;
    double min_raw_eigenvalue = 0.0;
    double floor_threshold = 0.0;
    bool floored = false;

    Index size() const { return values.rows(); }
};

GramMatrix gram(const Kernel& kernel, const Matrix& x);
/// Builds a GramMatrix (symmetrize, eigendecompose, floor) from raw values.
GramMatrix make_gram(Matrix values);

/// m x n matrix of h(x_new_k, x_train_i).
Matrix cross_gram(const Kernel& kernel, const Matrix& x_train, const Matrix& x_new);

}  // namespace iprior
