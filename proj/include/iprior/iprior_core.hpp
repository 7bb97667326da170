#pragma once

#include "iprior/common.hpp"
#include "iprior/error_models.hpp"
#include "iprior/kernels.hpp"

#include <functional>
#include <memory>
#include <random>
#include <utility>
#include <vector>

namespace iprior {

/// Prior mean f0 of the regression function.
class PriorMean {
public:
    enum class Kind { zero, constant, response_mean, values, function };
    using Function = std::function<double(const Vector&)>;

    static PriorMean zero();
    static PriorMean constant(double c);
    /// Constant equal to the mean of the training responses; resolved at fit time.
    static PriorMean response_mean();
    /// Fixed values at the training points. Cannot be evaluated elsewhere.
    static PriorMean values(Vector v);
    static PriorMean function(Function f);

    Kind kind() const { return kind_; }
    double constant_value() const { return constant_; }

    /// Replaces response_mean by the constant mean(y).
    PriorMean resolved(const Vector& y) const;
    /// f0 at the training points (x has one row per response).
    Vector at_training(const Matrix& x, const Vector& y) const;
    /// f0 at new points; throws for `values` and unresolved response_mean.
    Vector at(const Matrix& x) const;
    /// Restricts `values` to a subset of training indices; other kinds unchanged.
    PriorMean subset(const std::vector<Index>& idx) const;

private:
    Kind kind_ = Kind::zero;
    double constant_ = 0.0;
    Vector values_;
    Function function_;
};

/// How the prior covariance of f is built from the kernel h.
///   fisher: I-prior, cov f = lambda^2 H Psi H (Fisher information kernel).
///   kernel: ordinary Gaussian-process prior, cov f = lambda H. Its posterior
///           mean is the Tikhonov regularizer with penalty lambda^{-1}||f||^2.
enum class PriorCovariance { fisher, kernel };

/// V_y = prior covariance of f at the training points + Psi^{-1}.
Matrix marginal_covariance(const Matrix& h, double lambda, const ErrorModel& error,
                           PriorCovariance form = PriorCovariance::fisher);

/// Marginal log-likelihood of (lambda, Psi): Gaussian log-density of y
/// under N(f0, V_y), via Cholesky. Throws NumericalError if V_y is not
/// positive definite after one jitter retry.
double log_marginal(double lambda, const ErrorModel& error, const Vector& y, const Matrix& h,
                    const Vector& f0, PriorCovariance form = PriorCovariance::fisher);

/// O(n) evaluation of the iid-error log-likelihood over (log lambda, log psi)
/// from one eigendecomposition of H.
class SpectralLikelihood {
public:
    SpectralLikelihood(const GramMatrix& h, const Vector& residual,
                       PriorCovariance form = PriorCovariance::fisher);

    double operator()(double log_lambda, double log_psi) const;
    /// d L / d(log lambda), d L / d(log psi).
    Eigen::Vector2d gradient(double log_lambda, double log_psi) const;

private:
    Vector eig_;
    Vector z2_;
    PriorCovariance form_;
};

struct PosteriorSummary {
    Vector weights;            // posterior mean of w
    Matrix weight_covariance;  // V_y^{-1}
    double log_marginal = 0.0;
};

struct Prediction {
    Vector mean;
    Vector variance;
};

/// Everything needed to predict from a fitted model; this is what the
/// model JSON document stores.
struct FittedState {
    Kernel kernel;
    ErrorModel error;
    double lambda = 1.0;
    PriorCovariance form = PriorCovariance::fisher;
    Matrix x_train;
    Vector y;
    PriorMean f0;
    PosteriorSummary posterior;
    double jitter = 0.0;
};

/// Gaussian regression model y = f(X) + eps with the I-prior (or, with
/// PriorCovariance::kernel, a plain GP prior) on f. Fitting happens in the
/// constructor; a constructed model is immutable.
///
/// For the I-prior the posterior mean is f0(x) + lambda h_x^T w_hat with
/// w_hat = lambda Psi H V_y^{-1} (y - f0) and posterior variance
/// lambda^2 h_x^T V_y^{-1} h_x. For the kernel form the mean is
/// f0(x) + h_x^T w_hat with w_hat = lambda V_y^{-1}(y - f0) and variance
/// lambda h(x,x) - lambda^2 h_x^T V_y^{-1} h_x.
class IPriorModel {
public:
    IPriorModel(Kernel kernel, ErrorModel error, double lambda, Matrix x_train, Vector y,
                PriorMean f0 = PriorMean::response_mean(),
                PriorCovariance form = PriorCovariance::fisher);
    /// Reuses a Gram matrix already computed for (kernel, x_train).
    IPriorModel(Kernel kernel, ErrorModel error, double lambda, Matrix x_train, Vector y,
                PriorMean f0, PriorCovariance form, std::shared_ptr<const GramMatrix> h);

    /// Rebuilds a model from stored state without refitting.
    static IPriorModel restore(FittedState state);

    const Kernel& kernel() const { return state_.kernel; }
    const ErrorModel& error() const { return state_.error; }
    double lambda() const { return state_.lambda; }
    PriorCovariance form() const { return state_.form; }
    const Matrix& x_train() const { return state_.x_train; }
    const Vector& y() const { return state_.y; }
    const PriorMean& prior_mean() const { return state_.f0; }
    const GramMatrix& gram() const { return *gram_; }
    const PosteriorSummary& posterior() const { return state_.posterior; }
    const FittedState& state() const { return state_; }
    double jitter() const { return state_.jitter; }

    /// f_hat = f0 + K c over training kernel columns.
    Vector coefficients() const;
    Vector fitted() const;
    Prediction predict(const Matrix& x_new) const;

private:
    explicit IPriorModel(FittedState state);
    void fit();

    FittedState state_;
    std::shared_ptr<const GramMatrix> gram_;
};

PosteriorSummary posterior(const IPriorModel& model);
Prediction predict(const IPriorModel& model, const Matrix& x_new);

/// h_n(x,x') = sum_ij psi_ij h(x,x_i) h(x',x_j).
class FisherKernel {
public:
    FisherKernel(Kernel kernel, const ErrorModel& error, Matrix x_train);

    double operator()(const Vector& x, const Vector& xp) const;
    Matrix cross(const Matrix& a, const Matrix& b) const;
    const Matrix& precision() const { return psi_; }

private:
    Kernel kernel_;
    Matrix x_train_;
    Matrix psi_;
};

/// Fisher information on <f, g>: g^T Psi g with g evaluated at the training points.
double fisher_info_functional(const Vector& g_values, const ErrorModel& error);

/// ||f_w||^2_{F_n} = w^T Psi^{-1} w, computed by a Cholesky solve against Psi.
double fn_norm_squared(const Vector& w, const ErrorModel& error);

/// One I-prior draw f0 + lambda H_query w, w ~ N(0, Psi), at the query points.
Vector sample_prior(const Kernel& kernel, const ErrorModel& error, const Matrix& x_train,
                    double lambda, const PriorMean& f0, const Matrix& x_query,
                    std::mt19937_64& rng);

/// Maps a parameter vector to (lambda, error model).
using Parameterization = std::function<std::pair<double, ErrorModel>(const Vector& theta)>;

/// u_ij = 1/2 tr(V^{-1} dV/dtheta_i V^{-1} dV/dtheta_j) with dV by central
/// differences, step rel_step * max(|theta_i|, 1).
Matrix param_fisher_info(const Matrix& h, const Parameterization& param, const Vector& theta,
                         PriorCovariance form = PriorCovariance::fisher, double rel_step = 1e-5);

/// Analytic version for iid errors and theta = (log lambda, log psi).
Matrix param_fisher_info_iid(const Matrix& h, double lambda, double psi,
                             PriorCovariance form = PriorCovariance::fisher);

/// Analytic dV_y/d(log lambda), dV_y/d(log psi) for iid errors.
std::pair<Matrix, Matrix> marginal_covariance_derivatives_iid(const Matrix& h, double lambda, double psi,
                                                              PriorCovariance form = PriorCovariance::fisher);

/// U^{-1}; throws NumericalError when U is singular (no pseudo-inverse).
Matrix asymptotic_covariance(const Matrix& u);

// Centered Brownian motion RKHS over sorted reals (one-dimensional smoothing).

/// sum_i (f_{i+1} - f_i)^2 / (x_{i+1} - x_i): the integral of f'^2 for the
/// piecewise-linear interpolant.
double brownian_norm_squared(const Vector& sorted_x, const Vector& f);

/// Weights w (summing to zero) with f = H w for the centered Brownian kernel
/// anchored at sorted_x. With slopes s_k on [x_k, x_{k+1}]:
/// w_1 = -s_1, w_i = s_{i-1} - s_i, w_n = s_{n-1}.
Vector brownian_weights(const Vector& sorted_x, const Vector& f);

/// Discrete roughness penalty: squared first slope, squared slope changes,
/// squared last slope. Equals ||w||^2 for the weights above, hence
/// proportional to ||f||^2_{F_n} under iid errors.
double discrete_penalty(const Vector& sorted_x, const Vector& f);

}  // namespace iprior
