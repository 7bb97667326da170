#pragma once

#include "iprior/common.hpp"
#include "iprior/error_models.hpp"
#include "iprior/estimation.hpp"
#include "iprior/iprior_core.hpp"
#include "iprior/kernels.hpp"

#include <optional>
#include <string>
#include <vector>

namespace iprior {

// ---------------------------------------------------------------- Tikhonov

/// Minimizer of (y - f)^T Psi (y - f) + lambda^{-1} w^T H w over f = f0 + H w.
/// Same lambda orientation as the GP prior with covariance lambda h: large
/// lambda means weak regularization.
struct TikhonovFit {
    double lambda = 1.0;
    Vector weights;
    Vector f0;
    Vector fitted;
    double smoother_trace = 0.0;
};

TikhonovFit tikhonov_fit(const Matrix& h, const ErrorModel& error, double lambda, const Vector& y, const Vector& f0);
TikhonovFit tikhonov_fit(const Kernel& kernel, const Matrix& x, const ErrorModel& error, double lambda,
                         const Vector& y, const Vector& f0);

/// S = lambda H (lambda H + Psi^{-1})^{-1}; fitted = f0 + S (y - f0).
Matrix tikhonov_smoother(const Matrix& h, const ErrorModel& error, double lambda);

/// n ||(I - S) r||^2 / tr(I - S)^2 with r = y - f0, from the hat matrix.
/// With mean_estimated the response mean is part of the fit: r is demeaned
/// and the smoother becomes S + (I - S) J with J = 11^T / n.
double gcv_score(const Matrix& h, const ErrorModel& error, double lambda, const Vector& y, const Vector& f0,
                 bool mean_estimated = false);
/// Same score from the eigendecomposition of H; iid errors only.
double gcv_score_spectral(const GramMatrix& h, double psi, double lambda, const Vector& y, const Vector& f0,
                          bool mean_estimated = false);

struct GcvSelection {
    double lambda = 1.0;
    double score = 0.0;
    std::vector<std::pair<double, double>> table;  // (lambda, score) over the grid
};

/// Grid search over lambda, optionally refined by golden section in
/// log lambda between the neighbors of the best grid point.
GcvSelection gcv_select(const Matrix& h, const ErrorModel& error, const std::vector<double>& lambda_grid,
                        const Vector& y, const Vector& f0, bool refine = true, bool mean_estimated = false);

/// Log-spaced grid from lo to hi (inclusive), count points.
std::vector<double> log_grid(double lo, double hi, int count);

// ---------------------------------------------------------------- squared-exponential GPR

struct SeConfig {
    /// Length-scale grid; the best value is refined by golden section in log sigma.
    std::vector<double> sigma_grid = log_grid(0.005, 2.0, 14);
    bool refine = true;
    double xi = 1.0;
    /// Inner fit over (log lambda, log psi) at each sigma; set fixed_psi for known noise.
    FitConfig inner;
    /// GP prior cov lambda K (kernel) or the Fisher form lambda^2 K Psi K.
    PriorCovariance form = PriorCovariance::kernel;
    /// Center the SE kernel at the design points, as for the other smoothers.
    bool centered = false;
};

struct SeProfileRow {
    double sigma = 0.0;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    std::string status = "ok";
};

struct SeFit {
    bool breakdown = false;
    std::string message;
    double sigma = 0.0;
    LocalMaximum maximum;
    std::vector<SeProfileRow> profile;
    std::optional<IPriorModel> model;
};

/// Maximum marginal likelihood over (lambda, sigma, psi) for a GP prior with
/// squared-exponential covariance, profiling lambda and psi at each sigma.
/// Never throws for numerical trouble: returns breakdown = true instead.
SeFit se_gpr_fit(const Matrix& x, const Vector& y, const ErrorModel& error, const PriorMean& f0,
                 const SeConfig& config);

// ---------------------------------------------------------------- linear-model priors

/// g (X^T Psi X)^{-1}; throws when X^T Psi X is singular.
Matrix gprior_covariance(const Matrix& x, const ErrorModel& error, double g);

/// Prior covariance of beta under the canonical-kernel I-prior: scale X^T Psi X
/// (scale = lambda^2). Needs no inversion and exists for rank-deficient X.
Matrix iprior_linear_covariance(const Matrix& x, const ErrorModel& error, double scale);

/// Same prior under the Mahalanobis metric M: lambda^2 M X^T Psi X M.
Matrix iprior_linear_covariance(const Matrix& x, const ErrorModel& error, double lambda, const Matrix& metric);

}  // namespace iprior
