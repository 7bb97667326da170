#pragma once

#include "iprior/baselines.hpp"
#include "iprior/common.hpp"
#include "iprior/error_models.hpp"
#include "iprior/kernels.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace iprior {

enum class TruthKind { rough, iprior_path, se_path };
enum class Estimator { iprior, tikhonov, se };
enum class NormKind { l2, fn, f };

std::string to_string(TruthKind k);
std::string to_string(Estimator e);
std::string to_string(NormKind k);
TruthKind parse_truth(const std::string& s);
Estimator parse_estimator(const std::string& s);

struct StudyConfig {
    Index n = 50;
    std::vector<TruthKind> truths = {TruthKind::rough, TruthKind::iprior_path, TruthKind::se_path};
    std::vector<double> sds = {0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
    int replicates = 50;
    std::uint64_t seed = 1;
    std::vector<Estimator> estimators = {Estimator::iprior, Estimator::tikhonov, Estimator::se};
    double se_truth_sigma = 0.02;
    std::vector<double> log_lambda_starts = {-6.0, -3.0, 0.0, 3.0, 6.0};
    std::vector<double> se_sigma_grid = log_grid(0.005, 2.0, 14);
    int threads = 0;

    void validate() const;
};

struct StudyRow {
    TruthKind truth = TruthKind::rough;
    double sd = 0.0;
    Estimator estimator = Estimator::iprior;
    NormKind norm = NormKind::l2;
    double mae = 0.0;
    double baseline = 0.0;  // zero fit
    int breakdowns = 0;
};

struct StudyResult {
    StudyConfig config;
    std::vector<StudyRow> rows;

    /// Throws std::out_of_range when the combination was not run.
    const StudyRow& find(TruthKind truth, double sd, Estimator estimator, NormKind norm) const;
};

/// n equally spaced points on [0, 1], as an n x 1 matrix.
Matrix unit_grid(Index n);

/// Centered Brownian-motion kernel anchored at x (centered FBM-1/2).
Kernel centered_brownian_kernel(const Matrix& x);

/// H^a through the eigendecomposition with eigenvalues floored at zero.
Matrix matrix_power(const Matrix& h, double a);

struct TruthDraw {
    Vector f;
    Vector w;            // the normal draw the path came from
    double scale = 1.0;  // f = centered(raw) / scale
};

/// Simulated truth at the design points: H^{3/4} w, H w, or an SE-process
/// path; centered to sum zero and scaled so that f^T H^+ f = 1.
TruthDraw gen_truth(TruthKind kind, const GramMatrix& h, const Matrix& x, std::mt19937_64& rng,
                    double se_sigma = 0.02);

/// Estimation-error norms for delta = f_hat - f.
///   l2: sqrt(mean delta^2)
///   fn: sqrt(w^T Psi^{-1} w) with w = H^+ delta
///   f:  sqrt(delta^T H^+ delta)
class NormEvaluator {
public:
    NormEvaluator(const Matrix& h, ErrorModel error);
    double operator()(const Vector& delta, NormKind kind) const;

private:
    Matrix h_pinv_;
    ErrorModel error_;
};

/// Median over replicates of the chosen norm.
double mae(const std::vector<Vector>& deltas, NormKind kind, const Matrix& h, const ErrorModel& error);

double median(std::vector<double> values);

/// Full factorial study. Deterministic for a given seed regardless of the
/// number of threads; estimator failures are counted as breakdowns and
/// score as the zero fit.
StudyResult run_study(const StudyConfig& config);

/// CSV with columns truth,sd,estimator,norm,mae,baseline,breakdowns.
std::string study_csv(const StudyResult& result);
/// JSON manifest with the configuration and seed.
std::string study_manifest(const StudyConfig& config);

}  // namespace iprior
