#pragma once

#include "iprior/baselines.hpp"
#include "iprior/common.hpp"
#include "iprior/estimation.hpp"
#include "iprior/kernels.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace iprior {

struct Dataset {
    Matrix x;
    Vector y;
    std::vector<std::string> feature_names;
    std::string response;
    /// Set when y holds 0/1 class labels.
    bool labels = false;
    /// Inner product on the covariates (Sobolev for curves).
    Metric metric = Metric::euclidean();
    /// Train/test split; both empty when undefined.
    std::vector<Index> train;
    std::vector<Index> test;

    Index size() const { return y.size(); }
    bool has_split() const { return !train.empty() || !test.empty(); }
    /// Checks sizes, labels and that a defined split is disjoint and covering.
    void validate() const;
};

/// Parses a CSV with a header row. Every column except `response` is a covariate.
/// With label_mode the response must be 0 or 1.
Dataset parse_tabular(std::istream& in, const std::string& response, bool label_mode = false,
                      const std::string& source = "<stream>");
Dataset load_tabular(const std::string& path, const std::string& response, bool label_mode = false);

/// Covariates first, response last, full precision.
void write_tabular(std::ostream& out, const Dataset& data);

/// Reads a CSV whose first `channels` columns are a curve on a uniform grid.
/// The Sobolev metric with the given spacing is attached. With 215 rows the
/// split defaults to the first 172 for training; otherwise `train_rows` must
/// be given.
Dataset load_functional(const std::string& path, double spacing = 1.0, const std::string& response = "fat",
                        Index channels = 100, std::optional<Index> train_rows = std::nullopt);
Dataset parse_functional(std::istream& in, double spacing = 1.0, const std::string& response = "fat",
                         Index channels = 100, std::optional<Index> train_rows = std::nullopt,
                         const std::string& source = "<stream>");

/// Rows with zero norm under the dataset metric (e.g. constant curves under
/// the Sobolev metric); such rows are invisible to the canonical kernel.
std::vector<Index> degenerate_rows(const Dataset& data, double tolerance = 1e-12);

Dataset subset(const Dataset& data, const std::vector<Index>& rows);

// ---------------------------------------------------------------- classification

/// Builds the kernel for a training design (e.g. centered at its rows).
using KernelFactory = std::function<Kernel(const Matrix& x_train)>;

struct ClassifyProtocol {
    KernelFactory kernel;
    FitConfig config;
    PriorCovariance form = PriorCovariance::fisher;
    /// Pick among likelihood maxima by CV misclassification (slower).
    bool cv_select = false;
};

struct ClassifyRow {
    Index subsample = 0;
    int repeats = 0;
    int used = 0;        // repeats that produced a rate
    int degenerate = 0;  // single-class subsample even after one redraw
    int failed = 0;      // numerical failure while fitting
    double mean_rate = 0.0;  // percent
    double std_error = 0.0;  // sample sd / sqrt(used)
    std::vector<double> rates;
};

/// 0/1 classification with threshold 0.5; exactly 0.5 goes to class 1.
int classify(double fitted);

/// Misclassification percentage of predictions against 0/1 labels.
double misclassification_percent(const Vector& predicted, const Vector& labels);

/// Repeated random subsampling: fit on a subsample, classify the rest.
/// Deterministic in the seed regardless of thread count.
std::vector<ClassifyRow> classify_eval(const Dataset& data, const ClassifyProtocol& protocol,
                                       const std::vector<Index>& sizes, int repeats, std::uint64_t seed,
                                       int threads = 0);

std::string classify_csv(const std::vector<ClassifyRow>& rows);

// ---------------------------------------------------------------- Tecator benchmark

struct BenchmarkRow {
    std::string method;
    double train_rmse = 0.0;
    double test_rmse = 0.0;
    std::string detail;          // selected hyperparameters
    std::string status = "ok";   // error text when the row failed
};

struct BenchmarkOptions {
    FitConfig config;  // multi-start ML and CV settings for the I-prior rows
    std::vector<double> gamma_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98, 1.0};
    /// SE length scales as multiples of the median training distance.
    std::vector<double> sigma_multipliers = log_grid(1e-2, 10.0, 16);
    std::vector<double> tikhonov_grid = log_grid(1e-10, 1e10, 81);
    bool include_gamma = true;
    bool include_sqexp = true;
    bool include_tikhonov = true;
};

double rmse(const Vector& a, const Vector& b);

/// Train/test RMSE rows: global constant, Tikhonov (linear, FBM-1/2) with
/// GCV, and I-prior (linear, FBM-1/2, FBM with CV-selected gamma, SE with
/// ML sigma). A failing row is reported with its status and the rest continue.
std::vector<BenchmarkRow> tecator_benchmark(const Dataset& data, const BenchmarkOptions& options = {});

std::string benchmark_csv(const std::vector<BenchmarkRow>& rows);

}  // namespace iprior
