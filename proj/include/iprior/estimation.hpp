#pragma once

#include "iprior/common.hpp"
#include "iprior/error_models.hpp"
#include "iprior/iprior_core.hpp"
#include "iprior/kernels.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace iprior {

// ---------------------------------------------------------------- optimizer

using Objective = std::function<double(const Vector&)>;
using Gradient = std::function<Vector(const Vector&)>;

struct OptimizerOptions {
    int max_evaluations = 2000;
    /// Simplex stops once the spread of its values falls below this.
    double value_tolerance = 1e-9;
    /// Final compass step; a certified optimum beats every axis neighbor at
    /// this distance.
    double step_tolerance = 1e-4;
    double initial_step = 1.0;
    /// Box constraints; points outside evaluate to -infinity. Empty = none.
    Vector lower;
    Vector upper;
};

struct OptimizerResult {
    Vector theta;
    double value = -std::numeric_limits<double>::infinity();
    int evaluations = 0;
    bool certified = false;  // passed the axis-neighbor check at step_tolerance
};

/// Derivative-free maximization: Nelder-Mead simplex followed by a compass
/// search that shrinks to step_tolerance. Non-finite objective values are
/// treated as -infinity.
OptimizerResult maximize_nelder_mead(const Objective& f, const Vector& start, const OptimizerOptions& options);

/// Gradient ascent with backtracking, followed by the same compass polish.
OptimizerResult maximize_gradient(const Objective& f, const Gradient& grad, const Vector& start,
                                  const OptimizerOptions& options);

struct ScalarMaximum {
    double x = 0.0;
    double value = -std::numeric_limits<double>::infinity();
};

/// Golden-section search for a maximum of a unimodal f on [lo, hi]; the
/// endpoints are included as candidates.
ScalarMaximum maximize_golden(const std::function<double(double)>& f, double lo, double hi, double tolerance = 1e-6);

// ---------------------------------------------------------------- ML fitting

enum class CvLoss { rmse, misclassification };
enum class OptimizerKind { nelder_mead, gradient };

/// Default starts: log lambda, log psi in {-6, -3, 0, 3, 6}^2.
std::vector<std::pair<double, double>> default_start_grid();

struct FitConfig {
    std::vector<std::pair<double, double>> starts = default_start_grid();  // (log lambda, log psi)
    int max_evaluations = 2000;
    double tolerance = 1e-9;        // on the log-likelihood
    double param_tolerance = 1e-4;  // final step in log-parameter space
    int folds = 10;
    std::vector<double> hyper_grid;  // gamma or sigma candidates
    std::uint64_t seed = 1;          // fold assignment
    /// When set, psi is known and only log lambda is estimated.
    std::optional<double> fixed_psi;
    double log_bound = 25.0;  // |log lambda|, |log psi| <= log_bound
    OptimizerKind optimizer = OptimizerKind::nelder_mead;
    CvLoss loss = CvLoss::rmse;
    int threads = 1;

    void validate() const;
};

/// Model family with the hyperparameters left open.
struct ModelSkeleton {
    Kernel kernel;
    /// Correlation structure of the errors; the precision scale is estimated.
    ErrorModel error;
    Matrix x;
    PriorMean f0 = PriorMean::response_mean();
    PriorCovariance form = PriorCovariance::fisher;
};

struct LocalMaximum {
    double log_lambda = 0.0;
    double log_psi = 0.0;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    bool boundary = false;
    bool certified = false;
    int start_index = 0;
    int evaluations = 0;
};

struct MlDiagnostics {
    int starts = 0;
    int failed_starts = 0;  // never reached a finite likelihood
    std::vector<std::string> messages;
};

struct MlFit {
    std::vector<LocalMaximum> maxima;  // deduplicated, best likelihood first
    MlDiagnostics diagnostics;
    std::optional<IPriorModel> model;  // fitted at maxima.front()
};

/// Log-likelihood over (log lambda, log psi) for a skeleton. Uses the
/// spectral fast path for iid errors.
class LikelihoodSurface {
public:
    LikelihoodSurface(const ModelSkeleton& skeleton, const Vector& y);

    double operator()(double log_lambda, double log_psi) const;
    std::optional<Eigen::Vector2d> gradient(double log_lambda, double log_psi) const;
    const std::shared_ptr<const GramMatrix>& gram() const { return gram_; }

private:
    ModelSkeleton skeleton_;
    Vector y_;
    Vector residual_;
    std::shared_ptr<const GramMatrix> gram_;
    std::optional<SpectralLikelihood> spectral_;
};

/// Multi-start marginal-likelihood maximization over (log lambda, log psi).
/// Maxima closer than 1e-3 in parameter space are merged.
MlFit fit_ml(const ModelSkeleton& skeleton, const Vector& y, const FitConfig& config);

/// Model at a given maximum.
IPriorModel fit_at(const ModelSkeleton& skeleton, const Vector& y, const LocalMaximum& maximum,
                   std::shared_ptr<const GramMatrix> h = nullptr);

// ---------------------------------------------------------------- cross-validation

/// Balanced random fold labels in [0, folds).
std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed);

/// Pooled K-fold error (RMSE or misclassification rate) at fixed hyperparameters.
double cv_error(const ModelSkeleton& skeleton, const Vector& y, double lambda, double psi,
                const std::vector<int>& folds, CvLoss loss = CvLoss::rmse);

struct CvEntry {
    LocalMaximum maximum;
    double cv_error = std::numeric_limits<double>::infinity();
    std::string status = "ok";
};

struct CvSelection {
    std::size_t index = 0;
    std::vector<CvEntry> table;
};

/// Chooses the maximum with the smallest CV error; ties go to the larger
/// likelihood.
CvSelection select_by_cv(const std::vector<LocalMaximum>& maxima, const ModelSkeleton& skeleton,
                         const Vector& y, const FitConfig& config);

/// fit_ml followed by select_by_cv and a refit at the chosen maximum.
struct FitReport {
    std::string method = "iprior";
    MlFit ml;
    CvSelection cv;
    LocalMaximum chosen;
    std::optional<IPriorModel> model;
};

FitReport estimate(const ModelSkeleton& skeleton, const Vector& y, const FitConfig& config);

struct HyperRow {
    double hyper = 0.0;
    double cv_error = std::numeric_limits<double>::infinity();
    LocalMaximum chosen;
    std::string status = "ok";
};

struct HyperSelection {
    double hyper = 0.0;
    std::vector<HyperRow> table;
    std::optional<FitReport> report;  // for the selected value
};

/// Sweeps a kernel hyperparameter (gamma or sigma). Failures at a grid
/// value are recorded in the table and the sweep continues.
HyperSelection select_kernel_hyper(const std::vector<double>& grid,
                                   const std::function<Kernel(double)>& make_kernel,
                                   const ModelSkeleton& skeleton, const Vector& y, const FitConfig& config);

}  // namespace iprior
