#include "iprior/baselines.hpp"

#include "iprior/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace iprior {

namespace {

void check_tikhonov(const Matrix& h, double lambda, const Vector& y, const Vector& f0) {
    if (!(lambda > 0.0)) throw ValidationError("Tikhonov lambda must be positive");
    if (h.rows() != h.cols() || y.size() != h.rows() || f0.size() != h.rows()) {
        throw ValidationError("Tikhonov inputs have inconsistent sizes");
    }
}

Matrix tikhonov_system(const Matrix& h, const ErrorModel& error, double lambda) {
    return lambda * h + covariance_matrix(error, h.rows());
}

}  // namespace

TikhonovFit tikhonov_fit(const Matrix& h, const ErrorModel& error, double lambda, const Vector& y, const Vector& f0) {
    check_tikhonov(h, lambda, y, f0);
    const CholeskySolver v(tikhonov_system(h, error, lambda), "Tikhonov system");
    TikhonovFit fit;
    fit.lambda = lambda;
    fit.f0 = f0;
    fit.weights = lambda * v.solve(Vector(y - f0));
    fit.fitted = f0 + h * fit.weights;
    fit.smoother_trace = lambda * (h * v.inverse()).trace();
    return fit;
}

TikhonovFit tikhonov_fit(const Kernel& kernel, const Matrix& x, const ErrorModel& error, double lambda,
                         const Vector& y, const Vector& f0) {
    return tikhonov_fit(gram(kernel, x).values, error, lambda, y, f0);
}

Matrix tikhonov_smoother(const Matrix& h, const ErrorModel& error, double lambda) {
    if (!(lambda > 0.0)) throw ValidationError("Tikhonov lambda must be positive");
    const CholeskySolver v(tikhonov_system(h, error, lambda), "Tikhonov system");
    // S = lambda H V^{-1}; V and H are symmetric so S^T = lambda V^{-1} H.
    return lambda * v.solve(h).transpose();
}

namespace {

Vector demeaned(const Vector& v) { return (v.array() - v.mean()).matrix(); }

}  // namespace

double gcv_score(const Matrix& h, const ErrorModel& error, double lambda, const Vector& y, const Vector& f0,
                 bool mean_estimated) {
    check_tikhonov(h, lambda, y, f0);
    const Index n = h.rows();
    const Matrix s = tikhonov_smoother(h, error, lambda);
    const Vector r = mean_estimated ? demeaned(y - f0) : Vector(y - f0);
    const Vector resid = r - s * r;
    double tr = static_cast<double>(n) - s.trace();
    // (I - S)(I - J): the mean costs one degree of freedom
    if (mean_estimated) tr -= (static_cast<double>(n) - s.sum()) / static_cast<double>(n);
    if (!(tr > 0.0)) throw NumericalError("GCV undefined: tr(I - S) <= 0");
    return static_cast<double>(n) * resid.squaredNorm() / (tr * tr);
}

double gcv_score_spectral(const GramMatrix& h, double psi, double lambda, const Vector& y, const Vector& f0,
                          bool mean_estimated) {
    if (!(lambda > 0.0) || !(psi > 0.0)) throw ValidationError("GCV needs positive lambda and psi");
    const Index n = h.size();
    const Vector z = h.eigenvectors.transpose() * (mean_estimated ? demeaned(y - f0) : Vector(y - f0));
    const Vector ones = h.eigenvectors.transpose() * Vector::Ones(n);
    double rss = 0.0;
    double tr = 0.0;
    for (Index k = 0; k < n; ++k) {
        const double shrink = 1.0 / (1.0 + lambda * psi * h.eigenvalues(k));
        rss += shrink * shrink * z(k) * z(k);
        tr += shrink;
        if (mean_estimated) tr -= shrink * ones(k) * ones(k) / static_cast<double>(n);
    }
    if (!(tr > 0.0)) throw NumericalError("GCV undefined: tr(I - S) <= 0");
    return static_cast<double>(n) * rss / (tr * tr);
}

GcvSelection gcv_select(const Matrix& h, const ErrorModel& error, const std::vector<double>& lambda_grid,
                        const Vector& y, const Vector& f0, bool refine, bool mean_estimated) {
    if (lambda_grid.empty()) throw ValidationError("GCV lambda grid is empty");
    std::vector<double> grid = lambda_grid;
    std::sort(grid.begin(), grid.end());
    for (const double l : grid) {
        if (!(l > 0.0)) throw ValidationError("GCV lambda grid must be positive");
    }

    std::optional<GramMatrix> spectral;
    if (error.kind() == ErrorModel::Kind::iid) spectral = make_gram(h);
    const auto score = [&](double lambda) {
        return spectral ? gcv_score_spectral(*spectral, error.psi(), lambda, y, f0, mean_estimated)
                        : gcv_score(h, error, lambda, y, f0, mean_estimated);
    };

    GcvSelection sel;
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        sel.table.emplace_back(grid[i], score(grid[i]));
        if (sel.table[i].second < sel.table[best].second) best = i;
    }
    sel.lambda = sel.table[best].first;
    sel.score = sel.table[best].second;
    if (!refine || grid.size() < 2) return sel;

    const double lo = std::log(grid[best == 0 ? 0 : best - 1]);
    const double hi = std::log(grid[std::min(best + 1, grid.size() - 1)]);
    const auto m = maximize_golden(
        [&](double t) {
            try {
                return -score(std::exp(t));
            } catch (const NumericalError&) {
                return -std::numeric_limits<double>::infinity();
            }
        },
        lo, hi, 1e-6);
    if (-m.value < sel.score) {
        sel.lambda = std::exp(m.x);
        sel.score = -m.value;
    }
    return sel;
}

std::vector<double> log_grid(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw ValidationError("log grid needs 0 < lo <= hi and count >= 1");
    std::vector<double> out(static_cast<std::size_t>(count));
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log(lo);
    const double step = (std::log(hi) - a) / (count - 1);
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + step * i);
    out.back() = hi;
    return out;
}

// ---------------------------------------------------------------- SE GPR

SeFit se_gpr_fit(const Matrix& x, const Vector& y, const ErrorModel& error, const PriorMean& f0,
                 const SeConfig& config) {
    if (config.sigma_grid.empty()) throw ValidationError("SE sigma grid is empty");
    for (const double s : config.sigma_grid) {
        if (!(s > 0.0)) throw ValidationError("SE sigma grid must be positive");
    }
    config.inner.validate();

    SeFit out;
    std::vector<double> grid = config.sigma_grid;
    std::sort(grid.begin(), grid.end());

    const auto profile = [&](double sigma) -> std::pair<double, std::optional<MlFit>> {
        SeProfileRow row;
        row.sigma = sigma;
        std::optional<MlFit> fit;
        try {
            Kernel k = Kernel::sqexp(sigma, config.xi);
            if (config.centered) k = k.centered(x);
            ModelSkeleton s{k, error, x, f0, config.form};
            fit = fit_ml(s, y, config.inner);
            row.log_likelihood = fit->maxima.front().log_likelihood;
        } catch (const std::exception& e) {
            row.status = e.what();
        }
        out.profile.push_back(row);
        return {row.log_likelihood, std::move(fit)};
    };

    std::size_t best = 0;
    std::optional<MlFit> best_fit;
    double best_sigma = grid.front();
    double best_l = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto [l, fit] = profile(grid[i]);
        if (l > best_l) {
            best_l = l;
            best = i;
            best_sigma = grid[i];
            best_fit = std::move(fit);
        }
    }
    if (!best_fit) {
        out.breakdown = true;
        std::ostringstream msg;
        msg << "SE marginal likelihood was non-finite at every sigma";
        if (!out.profile.empty() && out.profile.front().status != "ok") msg << "; e.g. " << out.profile.front().status;
        out.message = msg.str();
        return out;
    }

    if (config.refine && grid.size() >= 2) {
        const double lo = std::log(grid[best == 0 ? 0 : best - 1]);
        const double hi = std::log(grid[std::min(best + 1, grid.size() - 1)]);
        const auto m = maximize_golden([&](double t) { return profile(std::exp(t)).first; }, lo, hi, 1e-3);
        if (m.value > best_l) {
            auto [l, fit] = profile(std::exp(m.x));
            if (fit && l >= best_l) {
                best_l = l;
                best_sigma = std::exp(m.x);
                best_fit = std::move(fit);
            }
        }
    }

    out.sigma = best_sigma;
    out.maximum = best_fit->maxima.front();
    out.model = std::move(best_fit->model);
    std::sort(out.profile.begin(), out.profile.end(),
              [](const SeProfileRow& a, const SeProfileRow& b) { return a.sigma < b.sigma; });
    return out;
}

// ---------------------------------------------------------------- linear-model priors

Matrix gprior_covariance(const Matrix& x, const ErrorModel& error, double g) {
    if (!(g >= 0.0)) throw ValidationError("g must be non-negative");
    const Matrix info = x.transpose() * precision_matrix(error, x.rows()) * x;
    const Eigen::FullPivLU<Matrix> lu(info);
    if (!lu.isInvertible()) {
        std::ostringstream msg;
        msg << "g-prior needs X^T Psi X invertible; rank " << lu.rank() << " of " << info.rows();
        throw NumericalError(msg.str());
    }
    if (g == 0.0) return Matrix::Zero(info.rows(), info.cols());
    const CholeskySolver chol(info, "X^T Psi X");
    return g * chol.inverse();
}

Matrix iprior_linear_covariance(const Matrix& x, const ErrorModel& error, double scale) {
    if (!(scale >= 0.0)) throw ValidationError("I-prior scale must be non-negative");
    return scale * (x.transpose() * precision_matrix(error, x.rows()) * x);
}

Matrix iprior_linear_covariance(const Matrix& x, const ErrorModel& error, double lambda, const Matrix& metric) {
    if (metric.rows() != x.cols() || metric.cols() != x.cols()) {
        throw ValidationError("metric dimension does not match the number of covariates");
    }
    const Matrix info = x.transpose() * precision_matrix(error, x.rows()) * x;
    const Matrix out = lambda * lambda * metric * info * metric;
    return 0.5 * (out + out.transpose());
}

}  // namespace iprior
