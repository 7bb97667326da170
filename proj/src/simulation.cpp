#include "iprior/simulation.hpp"

#include "iprior/estimation.hpp"
#include "iprior/linalg.hpp"
#include "iprior/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace iprior {

namespace {

constexpr std::uint64_t kTruthStream = 0x7472757468ULL;  // "truth"

Vector standard_normal(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    Vector w(n);
    for (Index i = 0; i < n; ++i) w(i) = z(rng);
    return w;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct ReplicateOutcome {
    Vector truth;
    std::vector<std::optional<Vector>> fits;  // one per estimator, nullopt = breakdown
};

}  // namespace

std::string to_string(TruthKind k) {
    switch (k) {
        case TruthKind::rough: return "rough";
        case TruthKind::iprior_path: return "iprior_path";
        case TruthKind::se_path: return "se_path";
    }
    return "?";
}

std::string to_string(Estimator e) {
    switch (e) {
        case Estimator::iprior: return "iprior";
        case Estimator::tikhonov: return "tikhonov";
        case Estimator::se: return "se";
    }
    return "?";
}

std::string to_string(NormKind k) {
    switch (k) {
        case NormKind::l2: return "L2";
        case NormKind::fn: return "Fn";
        case NormKind::f: return "F";
    }
    return "?";
}

TruthKind parse_truth(const std::string& s) {
    if (s == "rough") return TruthKind::rough;
    if (s == "iprior_path") return TruthKind::iprior_path;
    if (s == "se_path") return TruthKind::se_path;
    throw ValidationError("unknown truth kind '" + s + "' (expected rough, iprior_path or se_path)");
}

Estimator parse_estimator(const std::string& s) {
    if (s == "iprior") return Estimator::iprior;
    if (s == "tikhonov") return Estimator::tikhonov;
    if (s == "se") return Estimator::se;
    throw ValidationError("unknown estimator '" + s + "' (expected iprior, tikhonov or se)");
}

void StudyConfig::validate() const {
    if (n < 3) throw ValidationError("study needs n >= 3");
    if (replicates < 1) throw ValidationError("study needs at least one replicate");
    if (truths.empty()) throw ValidationError("study needs at least one truth kind");
    if (estimators.empty()) throw ValidationError("study needs at least one estimator");
    if (sds.empty()) throw ValidationError("study needs a non-empty SD ladder");
    for (const double s : sds) {
        if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("SD ladder must be strictly positive");
    }
    if (!(se_truth_sigma > 0.0)) throw ValidationError("SE truth sigma must be positive");
    if (log_lambda_starts.empty()) throw ValidationError("study needs at least one lambda start");
    if (se_sigma_grid.empty()) throw ValidationError("study needs a non-empty SE sigma grid");
}

const StudyRow& StudyResult::find(TruthKind truth, double sd, Estimator estimator, NormKind norm) const {
    for (const auto& r : rows) {
        if (r.truth == truth && r.sd == sd && r.estimator == estimator && r.norm == norm) return r;
    }
    throw std::out_of_range("no study row for " + to_string(truth) + ", sd " + fmt(sd) + ", " + to_string(estimator));
}

Matrix unit_grid(Index n) {
    if (n < 2) throw ValidationError("unit grid needs at least 2 points");
    Matrix x(n, 1);
    for (Index i = 0; i < n; ++i) x(i, 0) = static_cast<double>(i) / static_cast<double>(n - 1);
    return x;
}

Kernel centered_brownian_kernel(const Matrix& x) { return Kernel::fbm(0.5).centered(x); }

Matrix matrix_power(const Matrix& h, double a) {
    if (h.rows() != h.cols()) throw ValidationError("matrix power needs a square matrix");
    if (!(a > 0.0 && a <= 1.0)) throw ValidationError("matrix power exponent must lie in (0, 1]");
    const double scale = std::max(max_abs(h), 1.0);
    if (max_abs(h - h.transpose()) > 1e-10 * scale) throw ValidationError("matrix power needs a symmetric matrix");
    const SymmetricEigen e = symmetric_eigen(0.5 * (h + h.transpose()));
    Vector p = e.values;
    for (Index i = 0; i < p.size(); ++i) p(i) = p(i) > 0.0 ? std::pow(p(i), a) : 0.0;
    const Matrix out = e.vectors * p.asDiagonal() * e.vectors.transpose();
    return 0.5 * (out + out.transpose());
}

TruthDraw gen_truth(TruthKind kind, const GramMatrix& h, const Matrix& x, std::mt19937_64& rng, double se_sigma) {
    const Index n = h.size();
    if (x.rows() != n) throw ValidationError("truth design and Gram matrix differ in size");
    const Matrix h_pinv = pseudo_inverse_psd(h.values);

    Matrix root;
    switch (kind) {
        case TruthKind::rough: root = matrix_power(h.values, 0.75); break;
        case TruthKind::iprior_path: root = h.values; break;
        case TruthKind::se_path: {
            const GramMatrix k = gram(Kernel::sqexp(se_sigma), x);
            Vector s = k.eigenvalues.cwiseMax(0.0).cwiseSqrt();
            root = k.eigenvectors * s.asDiagonal() * k.eigenvectors.transpose();
            break;
        }
    }

    for (int attempt = 0; attempt < 2; ++attempt) {
        TruthDraw d;
        d.w = standard_normal(n, rng);
        Vector f = root * d.w;
        f.array() -= f.mean();
        const double norm2 = f.dot(h_pinv * f);
        if (norm2 > 1e-300 && std::isfinite(norm2)) {
            d.scale = std::sqrt(norm2);
            d.f = f / d.scale;
            return d;
        }
    }
    throw NumericalError("simulated truth has zero RKHS norm twice in a row");
}

NormEvaluator::NormEvaluator(const Matrix& h, ErrorModel error) : h_pinv_(pseudo_inverse_psd(h)), error_(std::move(error)) {}

double NormEvaluator::operator()(const Vector& delta, NormKind kind) const {
    if (delta.size() != h_pinv_.rows()) throw ValidationError("error vector does not match the Gram matrix");
    switch (kind) {
        case NormKind::l2: return std::sqrt(delta.squaredNorm() / static_cast<double>(delta.size()));
        case NormKind::fn: {
            const Vector w = h_pinv_ * delta;
            return std::sqrt(std::max(fn_norm_squared(w, error_), 0.0));
        }
        case NormKind::f: return std::sqrt(std::max(delta.dot(h_pinv_ * delta), 0.0));
    }
    return 0.0;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ValidationError("median of an empty list");
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

double mae(const std::vector<Vector>& deltas, NormKind kind, const Matrix& h, const ErrorModel& error) {
    if (deltas.empty()) throw ValidationError("MAE needs at least one replicate");
    const NormEvaluator norm(h, error);
    std::vector<double> v;
    v.reserve(deltas.size());
    for (const auto& d : deltas) v.push_back(norm(d, kind));
    return median(std::move(v));
}

StudyResult run_study(const StudyConfig& config) {
    config.validate();
    const Matrix x = unit_grid(config.n);
    const Kernel kernel = centered_brownian_kernel(x);
    const auto h = std::make_shared<const GramMatrix>(gram(kernel, x));

    const std::size_t n_truth = config.truths.size();
    const std::size_t n_sd = config.sds.size();
    const auto reps = static_cast<std::size_t>(config.replicates);

    // Truth paths depend on (truth, replicate) only, so every SD sees the same functions.
    std::vector<Vector> truths(n_truth * reps);
    parallel_for(truths.size(), resolve_threads(config.threads), [&](std::size_t task) {
        const std::size_t t = task / reps;
        const std::size_t r = task % reps;
        std::mt19937_64 rng(derive_seed(config.seed, {kTruthStream, static_cast<std::uint64_t>(config.truths[t]), r}));
        truths[task] = gen_truth(config.truths[t], *h, x, rng, config.se_truth_sigma).f;
    });

    std::vector<ReplicateOutcome> outcomes(n_truth * n_sd * reps);
    parallel_for(outcomes.size(), resolve_threads(config.threads), [&](std::size_t task) {
        const std::size_t t = task / (n_sd * reps);
        const std::size_t s = (task / reps) % n_sd;
        const std::size_t r = task % reps;
        const double sd = config.sds[s];
        const Vector& f = truths[t * reps + r];

        std::mt19937_64 rng(derive_seed(config.seed, {static_cast<std::uint64_t>(config.truths[t]), s, r}));
        const Vector y = f + sd * standard_normal(config.n, rng);
        const ErrorModel error = ErrorModel::iid(1.0 / (sd * sd));

        FitConfig fc;
        fc.starts.clear();
        for (const double l : config.log_lambda_starts) fc.starts.emplace_back(l, 0.0);
        fc.fixed_psi = error.psi();
        fc.threads = 1;

        ReplicateOutcome& out = outcomes[task];
        out.truth = f;
        for (const Estimator e : config.estimators) {
            std::optional<Vector> fitted;
            try {
                if (e == Estimator::se) {
                    SeConfig se;
                    se.sigma_grid = config.se_sigma_grid;
                    se.inner = fc;
                    se.centered = true;
                    const SeFit fit = se_gpr_fit(x, y, error, PriorMean::zero(), se);
                    if (!fit.breakdown) fitted = fit.model->fitted();
                } else {
                    const PriorCovariance form =
                        e == Estimator::iprior ? PriorCovariance::fisher : PriorCovariance::kernel;
                    const ModelSkeleton skeleton{kernel, error, x, PriorMean::zero(), form};
                    const MlFit fit = fit_ml(skeleton, y, fc);
                    fitted = fit.model->fitted();
                }
            } catch (const NumericalError&) {
                fitted.reset();
            }
            if (fitted && !fitted->allFinite()) fitted.reset();
            out.fits.push_back(std::move(fitted));
        }
    });

    StudyResult result;
    result.config = config;
    for (std::size_t t = 0; t < n_truth; ++t) {
        for (std::size_t s = 0; s < n_sd; ++s) {
            const double sd = config.sds[s];
            const NormEvaluator norm(h->values, ErrorModel::iid(1.0 / (sd * sd)));
            for (const NormKind nk : {NormKind::l2, NormKind::fn, NormKind::f}) {
                std::vector<double> base;
                for (std::size_t r = 0; r < reps; ++r) base.push_back(norm(-truths[t * reps + r], nk));
                const double baseline = median(base);
                for (std::size_t e = 0; e < config.estimators.size(); ++e) {
                    std::vector<double> errs;
                    int breakdowns = 0;
                    for (std::size_t r = 0; r < reps; ++r) {
                        const ReplicateOutcome& o = outcomes[(t * n_sd + s) * reps + r];
                        if (o.fits[e]) {
                            errs.push_back(norm(*o.fits[e] - o.truth, nk));
                        } else {
                            ++breakdowns;
                            errs.push_back(norm(-o.truth, nk));
                        }
                    }
                    result.rows.push_back({config.truths[t], sd, config.estimators[e], nk, median(errs), baseline,
                                           breakdowns});
                }
            }
        }
    }
    return result;
}

std::string study_csv(const StudyResult& result) {
    std::ostringstream out;
    out << "truth,sd,estimator,norm,mae,baseline,breakdowns\n";
    for (const auto& r : result.rows) {
        out << to_string(r.truth) << ',' << fmt(r.sd) << ',' << to_string(r.estimator) << ',' << to_string(r.norm)
            << ',' << fmt(r.mae) << ',' << fmt(r.baseline) << ',' << r.breakdowns << '\n';
    }
    return out.str();
}

std::string study_manifest(const StudyConfig& config) {
    nlohmann::ordered_json j;
    j["format"] = "iprior-study";
    j["version"] = 1;
    j["seed"] = config.seed;
    j["n"] = config.n;
    j["design"] = "equally spaced on [0,1]";
    j["kernel"] = "centered fbm(0.5)";
    j["replicates"] = config.replicates;
    j["sds"] = config.sds;
    std::vector<std::string> truths;
    for (const auto t : config.truths) truths.push_back(to_string(t));
    j["truths"] = truths;
    std::vector<std::string> est;
    for (const auto e : config.estimators) est.push_back(to_string(e));
    j["estimators"] = est;
    j["se_truth_sigma"] = config.se_truth_sigma;
    j["log_lambda_starts"] = config.log_lambda_starts;
    j["se_sigma_grid"] = config.se_sigma_grid;
    return j.dump(2) + "\n";
}

}  // namespace iprior
