#include "iprior/linalg.hpp"

#include <cmath>
#include <sstream>

namespace iprior {

SymmetricEigen symmetric_eigen(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("symmetric eigendecomposition did not converge");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace {

bool factor_ok(const Eigen::LLT<Matrix>& llt) {
    if (llt.info() != Eigen::Success) return false;
    const auto d = llt.matrixLLT().diagonal();
    for (Index i = 0; i < d.size(); ++i) {
        if (!(d(i) > 0.0) || !std::isfinite(d(i))) return false;
    }
    return true;
}

}  // namespace

CholeskySolver::CholeskySolver(const Matrix& a, std::string context) {
    if (a.rows() != a.cols()) {
        throw ValidationError("Cholesky: matrix is not square (" + context + ")");
    }
    if (!a.allFinite()) {
        throw NumericalError("Cholesky: non-finite entries (" + context + ")");
    }
    llt_.compute(a);
    if (factor_ok(llt_)) return;

    const double n = static_cast<double>(a.rows());
    jitter_ = 1e-10 * a.trace() / n;
    if (!(jitter_ > 0.0)) jitter_ = 1e-10;
    Matrix shifted = a;
    shifted.diagonal().array() += jitter_;
    llt_.compute(shifted);
    if (!factor_ok(llt_)) {
        std::ostringstream msg;
        msg << "matrix is not positive definite after jitter " << jitter_ << " (" << context << ")";
        throw NumericalError(msg.str());
    }
}

Vector CholeskySolver::solve(const Vector& b) const { return llt_.solve(b); }

Matrix CholeskySolver::solve(const Matrix& b) const { return llt_.solve(b); }

Matrix CholeskySolver::inverse() const {
    Matrix inv = llt_.solve(Matrix::Identity(size(), size()));
    return 0.5 * (inv + inv.transpose());
}

double CholeskySolver::log_determinant() const {
    return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Matrix pseudo_inverse_psd(const Matrix& a, double rel_cutoff) {
    const auto eig = symmetric_eigen(0.5 * (a + a.transpose()));
    const double top = eig.values.size() ? eig.values.maxCoeff() : 0.0;
    Vector inv = Vector::Zero(eig.values.size());
    for (Index i = 0; i < inv.size(); ++i) {
        if (eig.values(i) > rel_cutoff * top) inv(i) = 1.0 / eig.values(i);
    }
    return eig.vectors * inv.asDiagonal() * eig.vectors.transpose();
}

double max_abs(const Matrix& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace iprior
