#pragma once

#include "iprior/common.hpp"

#include <cmath>
#include <string>

namespace iprior {

/// Error structure of the regression: eps ~ N(0, Psi^{-1}).
///
/// - iid(psi):        Psi = psi * I.
/// - ar1(alpha, s):   eps_1 = e_1, eps_i = alpha eps_{i-1} + e_i, e ~ N(0, s^2).
///                    Covariance s^2 A A^T with A_ij = alpha^{i-j} (i >= j);
///                    precision s^{-2} B B^T with B unit upper bidiagonal,
///                    -alpha on the superdiagonal.
/// - ma1(theta, s):   eps_i = z_i + theta z_{i+1} (i < n), eps_n = z_n,
///                    z ~ N(0, s^2). Covariance s^2 C C^T with C unit upper
///                    bidiagonal, theta on the superdiagonal.
///
/// With this boundary convention AR1(alpha, s) precision equals MA1(-alpha,
/// 1/s) covariance. |alpha| = 1 is accepted (random-walk limit) and
/// reported by is_unit_root().
class ErrorModel {
public:
    enum class Kind { iid, ar1, ma1 };

    /// iid with psi = 1.
    ErrorModel() = default;

    static ErrorModel iid(double psi);
    static ErrorModel ar1(double alpha, double sigma);
    static ErrorModel ma1(double theta, double sigma);

    Kind kind() const { return kind_; }
    double psi() const { return psi_; }
    double alpha() const { return alpha_; }
    double sigma() const { return sigma_; }
    bool is_unit_root() const { return kind_ == Kind::ar1 && std::abs(alpha_) == 1.0; }

    /// Overall precision scale: psi for iid, 1/sigma^2 otherwise.
    double precision_scale() const;
    /// Same correlation structure with the precision scale replaced.
    ErrorModel with_precision_scale(double scale) const;

    Matrix precision_matrix(Index n) const;
    Matrix covariance_matrix(Index n) const;

    std::string name() const;
    std::string describe() const;

private:

    Kind kind_ = Kind::iid;
    double psi_ = 1.0;
    double alpha_ = 0.0;
    double sigma_ = 1.0;
};

Matrix precision_matrix(const ErrorModel& model, Index n);
Matrix covariance_matrix(const ErrorModel& model, Index n);

/// Closed-form ||f_w||^2_{F_n} = w^T Psi^{-1} w for AR(1) errors:
/// sigma^2 * sum_i (sum_{j>=i} alpha^{j-i} w_j)^2, with 0^0 = 1.
double ar1_fn_norm_squared(const Vector& w, const ErrorModel& model);

}  // namespace iprior
