#pragma once

#include "iprior/common.hpp"

#include <string>

namespace iprior {

struct SymmetricEigen {
    Vector values;   // ascending
    Matrix vectors;  // columns
};

SymmetricEigen symmetric_eigen(const Matrix& a);

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// If the plain factorization fails, it is retried once after adding
/// 1e-10 * trace(A) / n to the diagonal. A second failure throws
/// NumericalError carrying `context`.
class CholeskySolver {
public:
    CholeskySolver(const Matrix& a, std::string context);

    Vector solve(const Vector& b) const;
    Matrix solve(const Matrix& b) const;
    Matrix inverse() const;
    double log_determinant() const;
    double jitter() const { return jitter_; }
    Index size() const { return llt_.rows(); }

private:
    Eigen::LLT<Matrix> llt_;
    double jitter_ = 0.0;
};

/// Moore-Penrose inverse of a symmetric PSD matrix; eigenvalues below
/// rel_cutoff * largest are treated as zero.
Matrix pseudo_inverse_psd(const Matrix& a, double rel_cutoff = 1e-10);

/// Largest absolute entry.
double max_abs(const Matrix& a);

}  // namespace iprior
