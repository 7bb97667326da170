#include "iprior/cli.hpp"

#include "iprior/baselines.hpp"
#include "iprior/data_io.hpp"
#include "iprior/estimation.hpp"
#include "iprior/parallel.hpp"
#include "iprior/serialization.hpp"
#include "iprior/simulation.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <unistd.h>

namespace iprior {

namespace {

struct KernelFlags {
    std::string kernel = "fbm";
    std::optional<double> gamma;
    std::optional<double> sigma;
    std::optional<double> xi;
    bool center = true;
    std::string metric = "euclidean";
    std::optional<double> spacing;
    std::vector<double> gamma_grid;
    std::vector<double> sigma_grid;
};

struct ErrorFlags {
    std::string errors = "iid";
    std::optional<double> alpha;
    std::optional<double> theta;
};

struct EstimationFlags {
    std::optional<double> lambda;
    std::optional<double> psi;
    std::vector<std::string> starts;
    int folds = 10;
    int max_evals = 2000;
    std::string optimizer = "nelder-mead";
    std::string form = "fisher";
    std::string f0 = "mean";
};

struct Options {
    int threads = 0;
    std::uint64_t seed = 1;
    KernelFlags k;
    ErrorFlags e;
    EstimationFlags est;
    std::string data;
    std::string response;
    std::string model_path;
    std::string out;
    std::string report;
    std::string manifest;
    // simulate
    Index n = 50;
    int replicates = 50;
    std::vector<double> sds;
    std::vector<std::string> truths;
    std::vector<std::string> estimators;
    // tecator / classify
    std::optional<Index> train_rows;
    Index channels = 100;
    bool skip_gamma = false;
    bool skip_sqexp = false;
    std::vector<Index> sizes;
    int repeats = 40;
    bool cv_select = false;
};

void add_kernel_flags(CLI::App* app, Options& o) {
    app->add_option("--kernel", o.k.kernel, "canonical, fbm or sqexp")
        ->check(CLI::IsMember({"canonical", "fbm", "sqexp"}))
        ->capture_default_str();
    app->add_option("--gamma", o.k.gamma, "Hurst coefficient for fbm (default 0.5)");
    app->add_option("--sigma", o.k.sigma, "length scale for sqexp (estimated when absent)");
    app->add_option("--xi", o.k.xi, "sqexp exponent (default 1)");
    app->add_flag("--center,!--no-center", o.k.center, "center the kernel at the training inputs")
        ->capture_default_str();
    app->add_option("--metric", o.k.metric, "euclidean or sobolev")
        ->check(CLI::IsMember({"euclidean", "sobolev"}))
        ->capture_default_str();
    app->add_option("--spacing", o.k.spacing, "grid spacing of curve covariates (sobolev only)");
    app->add_option("--gamma-grid", o.k.gamma_grid, "choose gamma by cross-validation over these values")
        ->delimiter(',');
    app->add_option("--sigma-grid", o.k.sigma_grid, "choose sigma by cross-validation over these values")
        ->delimiter(',');
}

void add_error_flags(CLI::App* app, Options& o) {
    app->add_option("--errors", o.e.errors, "iid, ar1 or ma1")
        ->check(CLI::IsMember({"iid", "ar1", "ma1"}))
        ->capture_default_str();
    app->add_option("--alpha", o.e.alpha, "AR(1) coefficient (ar1 only)");
    app->add_option("--theta", o.e.theta, "MA(1) coefficient (ma1 only)");
}

void add_estimation_flags(CLI::App* app, Options& o) {
    app->add_option("--lambda", o.est.lambda, "fix the scale instead of estimating it");
    app->add_option("--psi", o.est.psi, "fix the error precision instead of estimating it");
    app->add_option("--starts", o.est.starts, "ML starts as logLambda:logPsi pairs")->delimiter(',');
    app->add_option("--folds", o.est.folds, "cross-validation folds")->capture_default_str();
    app->add_option("--max-evals", o.est.max_evals, "optimizer budget per start")->capture_default_str();
    app->add_option("--optimizer", o.est.optimizer, "nelder-mead or gradient")
        ->check(CLI::IsMember({"nelder-mead", "gradient"}))
        ->capture_default_str();
    app->add_option("--form", o.est.form, "fisher (I-prior) or kernel (GP / Tikhonov)")
        ->check(CLI::IsMember({"fisher", "kernel"}))
        ->capture_default_str();
    app->add_option("--f0", o.est.f0, "prior mean: mean, zero or a number")->capture_default_str();
}

void add_common(CLI::App* app, Options& o) {
    app->add_option("--threads", o.threads, "worker threads (default: IPRIOR_THREADS or all cores)");
    app->add_option("--seed", o.seed, "master seed")->capture_default_str();
}

bool given(const CLI::App* app, const std::string& name) {
    const CLI::Option* opt = app->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
}

void forbid(const CLI::App* app, const std::string& flag, bool allowed, const std::string& reason) {
    if (given(app, flag) && !allowed) throw ValidationError("invalid flag pairing: " + flag + " " + reason);
}

void validate_pairings(const CLI::App* app, const Options& o) {
    const auto& k = o.k;
    forbid(app, "--gamma", k.kernel == "fbm", "requires --kernel fbm (got " + k.kernel + ")");
    forbid(app, "--gamma-grid", k.kernel == "fbm", "requires --kernel fbm (got " + k.kernel + ")");
    forbid(app, "--sigma", k.kernel == "sqexp", "requires --kernel sqexp (got " + k.kernel + ")");
    forbid(app, "--sigma-grid", k.kernel == "sqexp", "requires --kernel sqexp (got " + k.kernel + ")");
    forbid(app, "--xi", k.kernel == "sqexp", "requires --kernel sqexp (got " + k.kernel + ")");
    forbid(app, "--spacing", k.metric == "sobolev", "requires --metric sobolev");
    forbid(app, "--alpha", o.e.errors == "ar1", "requires --errors ar1 (got " + o.e.errors + ")");
    forbid(app, "--theta", o.e.errors == "ma1", "requires --errors ma1 (got " + o.e.errors + ")");
    if (given(app, "--gamma") && given(app, "--gamma-grid")) {
        throw ValidationError("invalid flag pairing: --gamma and --gamma-grid are mutually exclusive");
    }
    if (given(app, "--sigma") && given(app, "--sigma-grid")) {
        throw ValidationError("invalid flag pairing: --sigma and --sigma-grid are mutually exclusive");
    }
    if (given(app, "--lambda") && (given(app, "--gamma-grid") || given(app, "--sigma-grid"))) {
        throw ValidationError("invalid flag pairing: --lambda cannot be combined with a hyperparameter grid");
    }
    if (given(app, "--lambda") && !given(app, "--psi") && o.e.errors == "iid") {
        throw ValidationError("--lambda needs --psi as well (fixing lambda alone is not supported)");
    }
    if (given(app, "--lambda") && k.kernel == "sqexp" && !given(app, "--sigma")) {
        throw ValidationError("--lambda with --kernel sqexp needs --sigma");
    }
    if (o.e.errors == "ar1" && !o.e.alpha) throw ValidationError("--errors ar1 needs --alpha");
    if (o.e.errors == "ma1" && !o.e.theta) throw ValidationError("--errors ma1 needs --theta");
}

Metric make_metric(const Options& o) {
    if (o.k.metric == "sobolev") return Metric::sobolev(o.k.spacing.value_or(1.0));
    return Metric::euclidean();
}

Kernel base_kernel(const Options& o, const Metric& metric, std::optional<double> hyper = std::nullopt) {
    if (o.k.kernel == "canonical") return Kernel::canonical(metric);
    if (o.k.kernel == "fbm") return Kernel::fbm(hyper.value_or(o.k.gamma.value_or(0.5)), metric);
    return Kernel::sqexp(hyper.value_or(o.k.sigma.value_or(1.0)), o.k.xi.value_or(1.0), metric);
}

Kernel make_kernel(const Options& o, const Metric& metric, const Matrix& x, std::optional<double> hyper = std::nullopt) {
    const Kernel k = base_kernel(o, metric, hyper);
    return o.k.center ? k.centered(x) : k;
}

ErrorModel make_error(const Options& o) {
    if (o.e.errors == "ar1") return ErrorModel::ar1(*o.e.alpha, 1.0);
    if (o.e.errors == "ma1") return ErrorModel::ma1(*o.e.theta, 1.0);
    return ErrorModel::iid(1.0);
}

PriorMean make_f0(const std::string& s) {
    if (s == "mean") return PriorMean::response_mean();
    if (s == "zero") return PriorMean::zero();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
        throw ValidationError("--f0 must be mean, zero or a number (got '" + s + "')");
    }
    return PriorMean::constant(v);
}

FitConfig make_config(const Options& o) {
    FitConfig c;
    if (!o.est.starts.empty()) {
        c.starts.clear();
        for (const auto& s : o.est.starts) {
            const auto colon = s.find(':');
            try {
                if (colon == std::string::npos) throw std::invalid_argument(s);
                std::size_t p1 = 0;
                std::size_t p2 = 0;
                const double l = std::stod(s.substr(0, colon), &p1);
                const double p = std::stod(s.substr(colon + 1), &p2);
                if (p1 != colon || p2 != s.size() - colon - 1) throw std::invalid_argument(s);
                c.starts.emplace_back(l, p);
            } catch (const std::logic_error&) {
                throw ValidationError("--starts entries must look like logLambda:logPsi (got '" + s + "')");
            }
        }
    }
    c.folds = o.est.folds;
    c.max_evaluations = o.est.max_evals;
    c.seed = o.seed;
    c.fixed_psi = o.est.psi;
    c.optimizer = o.est.optimizer == "gradient" ? OptimizerKind::gradient : OptimizerKind::nelder_mead;
    c.threads = static_cast<int>(resolve_threads(o.threads));
    c.validate();
    return c;
}

PriorCovariance make_form(const Options& o) {
    return o.est.form == "kernel" ? PriorCovariance::kernel : PriorCovariance::fisher;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string default_sibling(const std::string& path, const std::string& suffix) {
    std::filesystem::path p(path);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

// ---------------------------------------------------------------- subcommands

int cmd_fit(const CLI::App* app, const Options& o, std::ostream& out) {
    validate_pairings(app, o);
    Dataset data = load_tabular(o.data, o.response);
    data.metric = make_metric(o);
    const Metric& metric = data.metric;
    const ErrorModel error = make_error(o);
    const PriorMean f0 = make_f0(o.est.f0);
    const PriorCovariance form = make_form(o);

    std::optional<IPriorModel> model;
    Json report;
    if (o.est.lambda) {
        const ErrorModel e = error.with_precision_scale(o.est.psi.value_or(1.0));
        model.emplace(make_kernel(o, metric, data.x), e, *o.est.lambda, data.x, data.y, f0, form);
        report = {{"format", "iprior-fit-report"}, {"version", kModelFormatVersion}, {"method", "fixed"},
                  {"lambda", *o.est.lambda}, {"psi", e.precision_scale()},
                  {"log_likelihood", model->posterior().log_marginal}};
    } else {
        const FitConfig config = make_config(o);
        const ModelSkeleton skeleton{make_kernel(o, metric, data.x), error, data.x, f0, form};
        const std::vector<double>& grid = o.k.kernel == "fbm" ? o.k.gamma_grid : o.k.sigma_grid;
        if (!grid.empty()) {
            const HyperSelection sel = select_kernel_hyper(
                grid, [&](double h) { return make_kernel(o, metric, data.x, h); }, skeleton, data.y, config);
            report = to_json(*sel.report);
            report["hyperparameter"] = {{"name", o.k.kernel == "fbm" ? "gamma" : "sigma"}, {"selection", to_json(sel)}};
            model = sel.report->model;
        } else if (o.k.kernel == "sqexp" && !o.k.sigma) {
            if (metric.kind() != Metric::Kind::euclidean) {
                throw ValidationError("estimating sigma needs --metric euclidean; give --sigma for other metrics");
            }
            SeConfig se;
            se.inner = config;
            se.form = form;
            se.centered = o.k.center;
            se.xi = o.k.xi.value_or(1.0);
            const double spread = std::max((data.x.rowwise() - data.x.colwise().mean()).norm() /
                                               std::sqrt(static_cast<double>(data.size())),
                                           1e-12);
            se.sigma_grid.clear();
            for (const double m : log_grid(1e-2, 10.0, 16)) se.sigma_grid.push_back(m * spread);
            const SeFit fit = se_gpr_fit(data.x, data.y, error, f0, se);
            report = to_json(fit);
            if (fit.breakdown) throw NumericalError(fit.message);
            model = fit.model;
        } else {
            const FitReport r = estimate(skeleton, data.y, config);
            report = to_json(r);
            model = r.model;
        }
    }

    Json doc = model_to_json(*model);
    doc["features"] = data.feature_names;
    doc["response"] = data.response;
    write_file_atomic(o.model_path, doc.dump(1) + "\n");
    const std::string report_path = o.report.empty() ? default_sibling(o.model_path, ".report.json") : o.report;
    write_file_atomic(report_path, report.dump(2) + "\n");
    out << "fitted " << model->kernel().describe() << " with lambda=" << model->lambda() << ", "
        << model->error().describe() << "; wrote " << o.model_path << " and " << report_path << "\n";
    return exit_ok;
}

int cmd_predict(const Options& o, std::ostream& out) {
    const Json doc = [&] {
        try {
            return Json::parse(read_file(o.model_path));
        } catch (const Json::parse_error& e) {
            throw ValidationError("'" + o.model_path + "' is not valid JSON: " + e.what());
        }
    }();
    const IPriorModel model = model_from_json(doc);
    std::ifstream in(o.data);
    if (!in) throw ValidationError("cannot open '" + o.data + "'");
    // Parse all columns as covariates, then pick the ones the model was trained on.
    std::string header;
    std::getline(in, header);
    std::stringstream rest;
    rest << header << ",__row__\n";
    std::string line;
    Index count = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        rest << line << ',' << count++ << '\n';
    }
    const Dataset all = parse_tabular(rest, "__row__", false, o.data);
    std::vector<std::string> wanted = doc.value("features", all.feature_names);
    Matrix x(all.size(), static_cast<Index>(wanted.size()));
    for (std::size_t j = 0; j < wanted.size(); ++j) {
        const auto it = std::find(all.feature_names.begin(), all.feature_names.end(), wanted[j]);
        if (it == all.feature_names.end()) throw ValidationError(o.data + ": missing column '" + wanted[j] + "'");
        x.col(static_cast<Index>(j)) = all.x.col(it - all.feature_names.begin());
    }
    const Prediction p = model.predict(x);
    std::ostringstream csv;
    csv << "mean,variance\n";
    for (Index i = 0; i < p.mean.size(); ++i) csv << fmt(p.mean(i)) << ',' << fmt(p.variance(i)) << '\n';
    write_file_atomic(o.out, csv.str());
    out << "predicted " << p.mean.size() << " rows; wrote " << o.out << "\n";
    return exit_ok;
}

int cmd_cv(const CLI::App* app, const Options& o, std::ostream& out) {
    validate_pairings(app, o);
    Dataset data = load_tabular(o.data, o.response);
    data.metric = make_metric(o);
    const FitConfig config = make_config(o);
    const ModelSkeleton skeleton{make_kernel(o, data.metric, data.x), make_error(o), data.x, make_f0(o.est.f0),
                                 make_form(o)};
    std::ostringstream csv;
    csv << "lambda,psi,log_likelihood,cv_rmse,status\n";
    if (o.est.lambda) {
        const double psi = o.est.psi.value_or(1.0);
        const double err = cv_error(skeleton, data.y, *o.est.lambda, psi,
                                    fold_assignment(data.size(), config.folds, config.seed));
        csv << fmt(*o.est.lambda) << ',' << fmt(psi) << ",," << fmt(err) << ",ok\n";
        out << "cv rmse " << err << "\n";
    } else {
        const MlFit ml = fit_ml(skeleton, data.y, config);
        const CvSelection sel = select_by_cv(ml.maxima, skeleton, data.y, config);
        for (const auto& e : sel.table) {
            csv << fmt(std::exp(e.maximum.log_lambda)) << ',' << fmt(std::exp(e.maximum.log_psi)) << ','
                << fmt(e.maximum.log_likelihood) << ',' << fmt(e.cv_error) << ',' << e.status << '\n';
        }
        out << ml.maxima.size() << " local maxima; selected #" << sel.index << " with cv rmse "
            << sel.table[sel.index].cv_error << "\n";
    }
    write_file_atomic(o.out, csv.str());
    return exit_ok;
}

int cmd_simulate(const Options& o, std::ostream& out) {
    StudyConfig c;
    c.n = o.n;
    c.replicates = o.replicates;
    c.seed = o.seed;
    c.threads = static_cast<int>(resolve_threads(o.threads));
    if (!o.sds.empty()) c.sds = o.sds;
    if (!o.truths.empty()) {
        c.truths.clear();
        for (const auto& t : o.truths) c.truths.push_back(parse_truth(t));
    }
    if (!o.estimators.empty()) {
        c.estimators.clear();
        for (const auto& e : o.estimators) c.estimators.push_back(parse_estimator(e));
    }
    const StudyResult r = run_study(c);
    write_file_atomic(o.out, study_csv(r));
    const std::string manifest = o.manifest.empty() ? default_sibling(o.out, ".manifest.json") : o.manifest;
    write_file_atomic(manifest, study_manifest(c));
    out << "wrote " << r.rows.size() << " rows to " << o.out << " and manifest " << manifest << "\n";
    return exit_ok;
}

int cmd_tecator(const Options& o, std::ostream& out) {
    const Dataset data = load_functional(o.data, o.k.spacing.value_or(1.0), o.response.empty() ? "fat" : o.response,
                                         o.channels, o.train_rows);
    BenchmarkOptions b;
    b.config = make_config(o);
    b.include_gamma = !o.skip_gamma;
    b.include_sqexp = !o.skip_sqexp;
    const auto rows = tecator_benchmark(data, b);
    write_file_atomic(o.out, benchmark_csv(rows));
    for (const auto& r : rows) {
        out << r.method << ": train " << r.train_rmse << ", test " << r.test_rmse;
        if (r.status != "ok") out << " (" << r.status << ")";
        out << "\n";
    }
    return exit_ok;
}

int cmd_classify(const CLI::App* app, const Options& o, std::ostream& out) {
    validate_pairings(app, o);
    if (given(app, "--lambda") || given(app, "--psi")) {
        throw ValidationError("classify estimates lambda and psi; --lambda/--psi are not accepted");
    }
    Dataset data = load_tabular(o.data, o.response, true);
    data.metric = make_metric(o);
    ClassifyProtocol p;
    const Metric metric = data.metric;
    p.kernel = [&o, metric](const Matrix& x) { return make_kernel(o, metric, x); };
    p.config = make_config(o);
    p.form = make_form(o);
    p.cv_select = o.cv_select;
    const auto rows = classify_eval(data, p, o.sizes, o.repeats, o.seed, static_cast<int>(resolve_threads(o.threads)));
    write_file_atomic(o.out, classify_csv(rows));
    for (const auto& r : rows) {
        out << "subsample " << r.subsample << ": " << r.mean_rate << "% (se " << r.std_error << ", " << r.used
            << " of " << r.repeats << " repeats)\n";
    }
    return exit_ok;
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.parent_path() / ("." + target.filename().string() + ".tmp" + std::to_string(::getpid()));
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ValidationError("cannot write '" + tmp.string() + "'");
        f << content;
        f.flush();
        if (!f) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw ValidationError("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw ValidationError("cannot move output into place at '" + path + "'");
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"I-prior regression: fitting, prediction, cross-validation, simulation and benchmarks", "iprior"};
    app.require_subcommand(1);
    Options o;

    auto* fit = app.add_subcommand("fit", "fit a model to a CSV and write model JSON plus a fit report");
    add_common(fit, o);
    add_kernel_flags(fit, o);
    add_error_flags(fit, o);
    add_estimation_flags(fit, o);
    fit->add_option("--data", o.data, "training CSV")->required();
    fit->add_option("--response", o.response, "response column")->required();
    fit->add_option("--model", o.model_path, "output model JSON")->required();
    fit->add_option("--report", o.report, "output fit report JSON (default: model path with extension .report.json)");

    auto* predict = app.add_subcommand("predict", "predict mean and variance at new inputs");
    add_common(predict, o);
    predict->add_option("--model", o.model_path, "model JSON written by fit")->required();
    predict->add_option("--data", o.data, "CSV with the training covariate columns")->required();
    predict->add_option("--out", o.out, "output CSV")->required();

    auto* cv = app.add_subcommand("cv", "K-fold cross-validation at fixed or ML hyperparameters");
    add_common(cv, o);
    add_kernel_flags(cv, o);
    add_error_flags(cv, o);
    add_estimation_flags(cv, o);
    cv->add_option("--data", o.data, "CSV")->required();
    cv->add_option("--response", o.response, "response column")->required();
    cv->add_option("--out", o.out, "output CSV")->required();

    auto* sim = app.add_subcommand("simulate", "run the smoothing simulation study");
    add_common(sim, o);
    sim->add_option("--n", o.n, "sample size")->capture_default_str();
    sim->add_option("--replicates", o.replicates, "replicates per cell")->capture_default_str();
    sim->add_option("--sds", o.sds, "error SD ladder")->delimiter(',');
    sim->add_option("--truths", o.truths, "rough, iprior_path, se_path")->delimiter(',');
    sim->add_option("--estimators", o.estimators, "iprior, tikhonov, se")->delimiter(',');
    sim->add_option("--out", o.out, "output CSV")->default_val("study.csv");
    sim->add_option("--manifest", o.manifest, "output JSON manifest (default: output path with extension .manifest.json)");

    auto* tec = app.add_subcommand("tecator", "functional regression benchmark on a Tecator-style CSV");
    add_common(tec, o);
    add_estimation_flags(tec, o);
    tec->add_option("--data", o.data, "CSV: curve columns first, then responses")->required();
    tec->add_option("--response", o.response, "response column (default fat)");
    tec->add_option("--spacing", o.k.spacing, "channel spacing");
    tec->add_option("--channels", o.channels, "curve columns")->capture_default_str();
    tec->add_option("--train-rows", o.train_rows, "first rows used for training (default 172 of 215)");
    tec->add_flag("--skip-gamma", o.skip_gamma, "omit the gamma sweep");
    tec->add_flag("--skip-sqexp", o.skip_sqexp, "omit the SE row");
    tec->add_option("--out", o.out, "output CSV")->default_val("tecator.csv");

    auto* cls = app.add_subcommand("classify", "repeated-subsample 0/1 classification");
    add_common(cls, o);
    add_kernel_flags(cls, o);
    add_estimation_flags(cls, o);
    cls->add_option("--data", o.data, "CSV")->required();
    cls->add_option("--response", o.response, "0/1 label column")->required();
    cls->add_option("--sizes", o.sizes, "training subsample sizes")->delimiter(',')->required();
    cls->add_option("--repeats", o.repeats, "repeats per size")->capture_default_str();
    cls->add_flag("--cv-select", o.cv_select, "choose among likelihood maxima by CV");
    cls->add_option("--out", o.out, "output CSV")->default_val("classify.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        const auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.front()->help());
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return exit_validation;
    }

    try {
        if (fit->parsed()) return cmd_fit(fit, o, out);
        if (predict->parsed()) return cmd_predict(o, out);
        if (cv->parsed()) return cmd_cv(cv, o, out);
        if (sim->parsed()) return cmd_simulate(o, out);
        if (tec->parsed()) return cmd_tecator(o, out);
        if (cls->parsed()) return cmd_classify(cls, o, out);
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_validation;
    }
    return exit_validation;
}

}  // namespace iprior
