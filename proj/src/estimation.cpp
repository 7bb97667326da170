#include "iprior/estimation.hpp"

#include "iprior/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace iprior {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMergeDistance = 1e-3;

std::vector<Index> indices_where(const std::vector<int>& folds, int k, bool equal) {
    std::vector<Index> out;
    for (std::size_t i = 0; i < folds.size(); ++i) {
        if ((folds[i] == k) == equal) out.push_back(static_cast<Index>(i));
    }
    return out;
}

Matrix take_rows(const Matrix& m, const std::vector<Index>& idx) {
    Matrix out(static_cast<Index>(idx.size()), m.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = m.row(idx[k]);
    return out;
}

Vector take(const Vector& v, const std::vector<Index>& idx) {
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Index>(k)) = v(idx[k]);
    return out;
}

}  // namespace

std::vector<std::pair<double, double>> default_start_grid() {
    std::vector<std::pair<double, double>> out;
    for (const double l : {-6.0, -3.0, 0.0, 3.0, 6.0}) {
        for (const double p : {-6.0, -3.0, 0.0, 3.0, 6.0}) out.emplace_back(l, p);
    }
    return out;
}

void FitConfig::validate() const {
    if (starts.empty()) throw ValidationError("fit configuration needs at least one start");
    if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
    if (max_evaluations < 1) throw ValidationError("optimizer budget must be positive");
    if (!(param_tolerance > 0.0)) throw ValidationError("parameter tolerance must be positive");
    if (fixed_psi && !(*fixed_psi > 0.0)) throw ValidationError("fixed psi must be positive");
    if (!(log_bound > 0.0)) throw ValidationError("log bound must be positive");
}

// ---------------------------------------------------------------- surface

LikelihoodSurface::LikelihoodSurface(const ModelSkeleton& skeleton, const Vector& y) : skeleton_(skeleton), y_(y) {
    if (skeleton.x.rows() != y.size()) throw ValidationError("skeleton inputs and responses differ in length");
    residual_ = y - skeleton.f0.at_training(skeleton.x, y);
    gram_ = std::make_shared<const GramMatrix>(iprior::gram(skeleton.kernel, skeleton.x));
    if (skeleton.error.kind() == ErrorModel::Kind::iid) spectral_.emplace(*gram_, residual_, skeleton.form);
}

double LikelihoodSurface::operator()(double log_lambda, double log_psi) const {
    if (spectral_) return (*spectral_)(log_lambda, log_psi);
    try {
        const ErrorModel e = skeleton_.error.with_precision_scale(std::exp(log_psi));
        return log_marginal(std::exp(log_lambda), e, y_, gram_->values, y_ - residual_, skeleton_.form);
    } catch (const NumericalError&) {
        return kNegInf;
    } catch (const ValidationError&) {
        return kNegInf;
    }
}

std::optional<Eigen::Vector2d> LikelihoodSurface::gradient(double log_lambda, double log_psi) const {
    if (!spectral_) return std::nullopt;
    return spectral_->gradient(log_lambda, log_psi);
}

// ---------------------------------------------------------------- fit_ml

MlFit fit_ml(const ModelSkeleton& skeleton, const Vector& y, const FitConfig& config) {
    config.validate();
    const LikelihoodSurface surface(skeleton, y);
    const bool psi_fixed = config.fixed_psi.has_value();
    const double log_psi_fixed = psi_fixed ? std::log(*config.fixed_psi) : 0.0;
    const Index dim = psi_fixed ? 1 : 2;

    std::vector<Vector> starts;
    for (const auto& [l, p] : config.starts) {
        Vector s(dim);
        s(0) = l;
        if (!psi_fixed) s(1) = p;
        if (std::none_of(starts.begin(), starts.end(), [&](const Vector& o) { return o == s; })) starts.push_back(s);
    }

    OptimizerOptions opts;
    opts.max_evaluations = config.max_evaluations;
    opts.value_tolerance = config.tolerance;
    opts.step_tolerance = config.param_tolerance;
    opts.lower = Vector::Constant(dim, -config.log_bound);
    opts.upper = Vector::Constant(dim, config.log_bound);

    const Objective objective = [&](const Vector& t) {
        return surface(t(0), psi_fixed ? log_psi_fixed : t(1));
    };
    const Gradient gradient = [&](const Vector& t) {
        const auto g = surface.gradient(t(0), psi_fixed ? log_psi_fixed : t(1));
        Vector out(dim);
        out(0) = (*g)(0);
        if (!psi_fixed) out(1) = (*g)(1);
        return out;
    };
    const bool use_gradient = config.optimizer == OptimizerKind::gradient && surface.gradient(0.0, 0.0).has_value();

    std::vector<OptimizerResult> results(starts.size());
    parallel_for(starts.size(), resolve_threads(config.threads), [&](std::size_t i) {
        results[i] = use_gradient ? maximize_gradient(objective, gradient, starts[i], opts)
                                  : maximize_nelder_mead(objective, starts[i], opts);
    });

    MlFit fit;
    fit.diagnostics.starts = static_cast<int>(starts.size());
    std::vector<LocalMaximum> found;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        if (!std::isfinite(r.value)) {
            ++fit.diagnostics.failed_starts;
            std::ostringstream msg;
            msg << "start " << i << " (" << starts[i].transpose() << ") never reached a finite likelihood";
            fit.diagnostics.messages.push_back(msg.str());
            continue;
        }
        LocalMaximum m;
        m.log_lambda = r.theta(0);
        m.log_psi = psi_fixed ? log_psi_fixed : r.theta(1);
        m.log_likelihood = r.value;
        m.certified = r.certified;
        m.evaluations = r.evaluations;
        m.start_index = static_cast<int>(i);
        const double edge = 1e-2;
        m.boundary = std::abs(r.theta(0)) >= config.log_bound - edge ||
                     (!psi_fixed && std::abs(r.theta(1)) >= config.log_bound - edge);
        found.push_back(m);
    }
    if (found.empty()) {
        std::ostringstream msg;
        msg << "all " << starts.size() << " starts failed to produce a finite marginal likelihood";
        if (!fit.diagnostics.messages.empty()) msg << "; e.g. " << fit.diagnostics.messages.front();
        throw NumericalError(msg.str());
    }

    std::sort(found.begin(), found.end(), [](const LocalMaximum& a, const LocalMaximum& b) {
        if (a.log_likelihood != b.log_likelihood) return a.log_likelihood > b.log_likelihood;
        if (a.log_lambda != b.log_lambda) return a.log_lambda < b.log_lambda;
        return a.log_psi < b.log_psi;
    });
    for (const auto& m : found) {
        const bool duplicate = std::any_of(fit.maxima.begin(), fit.maxima.end(), [&](const LocalMaximum& k) {
            return std::hypot(k.log_lambda - m.log_lambda, k.log_psi - m.log_psi) < kMergeDistance;
        });
        if (!duplicate) fit.maxima.push_back(m);
    }
    fit.model.emplace(fit_at(skeleton, y, fit.maxima.front(), surface.gram()));
    return fit;
}

IPriorModel fit_at(const ModelSkeleton& skeleton, const Vector& y, const LocalMaximum& maximum,
                   std::shared_ptr<const GramMatrix> h) {
    return IPriorModel(skeleton.kernel, skeleton.error.with_precision_scale(std::exp(maximum.log_psi)),
                       std::exp(maximum.log_lambda), skeleton.x, y, skeleton.f0, skeleton.form, std::move(h));
}

// ---------------------------------------------------------------- cross-validation

std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed) {
    if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> out(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < perm.size(); ++k) out[static_cast<std::size_t>(perm[k])] = static_cast<int>(k % static_cast<std::size_t>(folds));
    return out;
}

double cv_error(const ModelSkeleton& skeleton, const Vector& y, double lambda, double psi,
                const std::vector<int>& folds, CvLoss loss) {
    if (static_cast<Index>(folds.size()) != y.size()) throw ValidationError("fold labels do not match the data size");
    const int k_max = folds.empty() ? 0 : *std::max_element(folds.begin(), folds.end());
    const ErrorModel error = skeleton.error.with_precision_scale(psi);
    double total = 0.0;
    Index count = 0;
    for (int k = 0; k <= k_max; ++k) {
        const auto test = indices_where(folds, k, true);
        if (test.empty()) continue;
        if (test.size() < 2) {
            std::ostringstream msg;
            msg << "cross-validation fold " << k << " has fewer than 2 points";
            throw ValidationError(msg.str());
        }
        const auto train = indices_where(folds, k, false);
        if (train.empty()) throw ValidationError("cross-validation fold leaves no training data");
        const IPriorModel model(skeleton.kernel, error, lambda, take_rows(skeleton.x, train), take(y, train),
                                skeleton.f0.subset(train), skeleton.form);
        const Vector pred = model.predict(take_rows(skeleton.x, test)).mean;
        const Vector truth = take(y, test);
        for (Index i = 0; i < pred.size(); ++i) {
            if (loss == CvLoss::rmse) {
                const double e = pred(i) - truth(i);
                total += e * e;
            } else {
                const int label = pred(i) >= 0.5 ? 1 : 0;
                total += (label == static_cast<int>(std::lround(truth(i)))) ? 0.0 : 1.0;
            }
        }
        count += pred.size();
    }
    if (count == 0) throw ValidationError("cross-validation has no held-out points");
    const double mean = total / static_cast<double>(count);
    return loss == CvLoss::rmse ? std::sqrt(mean) : mean;
}

CvSelection select_by_cv(const std::vector<LocalMaximum>& maxima, const ModelSkeleton& skeleton, const Vector& y,
                         const FitConfig& config) {
    if (maxima.empty()) throw ValidationError("no maxima to choose from");
    CvSelection sel;
    sel.table.resize(maxima.size());
    if (maxima.size() == 1) {
        sel.table[0].maximum = maxima[0];
        sel.table[0].status = "only candidate";
        try {
            sel.table[0].cv_error = cv_error(skeleton, y, std::exp(maxima[0].log_lambda), std::exp(maxima[0].log_psi),
                                             fold_assignment(y.size(), config.folds, config.seed), config.loss);
        } catch (const std::exception& e) {
            sel.table[0].status = e.what();
        }
        return sel;
    }
    const auto folds = fold_assignment(y.size(), config.folds, config.seed);
    parallel_for(maxima.size(), resolve_threads(config.threads), [&](std::size_t i) {
        CvEntry& entry = sel.table[i];
        entry.maximum = maxima[i];
        try {
            entry.cv_error = cv_error(skeleton, y, std::exp(maxima[i].log_lambda), std::exp(maxima[i].log_psi), folds,
                                      config.loss);
        } catch (const NumericalError& e) {
            entry.status = e.what();
        }
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < sel.table.size(); ++i) {
        const auto& a = sel.table[i];
        const auto& b = sel.table[best];
        const double tol = 1e-12 * std::max(std::abs(b.cv_error), 1e-300);
        const bool better = a.cv_error < b.cv_error - tol ||
                            (std::abs(a.cv_error - b.cv_error) <= tol &&
                             a.maximum.log_likelihood > b.maximum.log_likelihood);
        if (better) best = i;
    }
    if (!std::isfinite(sel.table[best].cv_error)) throw NumericalError("cross-validation failed at every maximum");
    sel.index = best;
    return sel;
}

FitReport estimate(const ModelSkeleton& skeleton, const Vector& y, const FitConfig& config) {
    FitReport report;
    report.ml = fit_ml(skeleton, y, config);
    report.cv = select_by_cv(report.ml.maxima, skeleton, y, config);
    report.chosen = report.ml.maxima[report.cv.index];
    if (report.cv.index == 0) {
        report.model = report.ml.model;
    } else {
        report.model.emplace(fit_at(skeleton, y, report.chosen, std::make_shared<const GramMatrix>(report.ml.model->gram())));
    }
    return report;
}

HyperSelection select_kernel_hyper(const std::vector<double>& grid, const std::function<Kernel(double)>& make_kernel,
                                   const ModelSkeleton& skeleton, const Vector& y, const FitConfig& config) {
    if (grid.empty()) throw ValidationError("kernel hyperparameter grid is empty");
    HyperSelection out;
    std::vector<std::optional<FitReport>> reports(grid.size());
    out.table.resize(grid.size());
    FitConfig inner = config;
    inner.threads = 1;
    parallel_for(grid.size(), resolve_threads(config.threads), [&](std::size_t i) {
        HyperRow& row = out.table[i];
        row.hyper = grid[i];
        try {
            ModelSkeleton s = skeleton;
            s.kernel = make_kernel(grid[i]);
            reports[i] = estimate(s, y, inner);
            row.chosen = reports[i]->chosen;
            row.cv_error = reports[i]->cv.table[reports[i]->cv.index].cv_error;
        } catch (const std::exception& e) {
            row.status = e.what();
        }
    });
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!reports[i] || !std::isfinite(out.table[i].cv_error)) continue;
        if (!best || out.table[i].cv_error < out.table[*best].cv_error) best = i;
    }
    if (!best) throw NumericalError("kernel hyperparameter sweep: every grid value failed");
    out.hyper = grid[*best];
    out.report = std::move(reports[*best]);
    return out;
}

}  // namespace iprior
