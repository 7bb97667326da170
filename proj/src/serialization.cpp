#include "iprior/serialization.hpp"

#include <cmath>

namespace iprior {

namespace {

Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from(const Json& j, const char* what) {
    if (!j.is_array()) throw ValidationError(std::string("model JSON: '") + what + "' must be an array of rows");
    const auto n = static_cast<Index>(j.size());
    const Index p = n == 0 ? 0 : static_cast<Index>(j.at(0).size());
    Matrix m(n, p);
    for (Index i = 0; i < n; ++i) {
        const Json& row = j.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<Index>(row.size()) != p) {
            throw ValidationError(std::string("model JSON: '") + what + "' has ragged rows");
        }
        for (Index k = 0; k < p; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    return m;
}

Json vector_json(const Vector& v) {
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vector vector_from(const Json& j, const char* what) {
    if (!j.is_array()) throw ValidationError(std::string("model JSON: '") + what + "' must be an array");
    Vector v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

// JSON has no infinity; non-finite numbers are written as null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <typename F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("malformed ") + what + " JSON: " + e.what());
    }
}

}  // namespace

Json to_json(const Metric& metric) {
    Json j;
    switch (metric.kind()) {
        case Metric::Kind::euclidean: j["kind"] = "euclidean"; break;
        case Metric::Kind::sobolev:
            j["kind"] = "sobolev";
            j["spacing"] = metric.spacing();
            break;
        case Metric::Kind::mahalanobis:
            j["kind"] = "mahalanobis";
            j["matrix"] = matrix_json(metric.matrix());
            break;
    }
    return j;
}

Metric metric_from_json(const Json& j) {
    return guarded("metric", [&] {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "euclidean") return Metric::euclidean();
        if (kind == "sobolev") return Metric::sobolev(j.at("spacing").get<double>());
        if (kind == "mahalanobis") return Metric::mahalanobis(matrix_from(j.at("matrix"), "matrix"));
        throw ValidationError("unknown metric kind '" + kind + "'");
    });
}

Json to_json(const Kernel& kernel) {
    Json j;
    switch (kernel.kind()) {
        case KernelKind::canonical: j["kind"] = "canonical"; break;
        case KernelKind::fbm:
            j["kind"] = "fbm";
            j["gamma"] = kernel.gamma();
            break;
        case KernelKind::sqexp:
            j["kind"] = "sqexp";
            j["sigma"] = kernel.sigma();
            j["xi"] = kernel.xi();
            break;
    }
    j["metric"] = to_json(kernel.metric());
    Json layers = Json::array();
    for (const auto& a : kernel.anchor_sets()) layers.push_back(matrix_json(a));
    j["centering"] = layers;
    return j;
}

Kernel kernel_from_json(const Json& j) {
    return guarded("kernel", [&] {
        const auto kind = j.at("kind").get<std::string>();
        const Metric metric = metric_from_json(j.at("metric"));
        Kernel k;
        if (kind == "canonical") {
            k = Kernel::canonical(metric);
        } else if (kind == "fbm") {
            k = Kernel::fbm(j.at("gamma").get<double>(), metric);
        } else if (kind == "sqexp") {
            k = Kernel::sqexp(j.at("sigma").get<double>(), j.at("xi").get<double>(), metric);
        } else {
            throw ValidationError("unknown kernel kind '" + kind + "'");
        }
        for (const auto& layer : j.at("centering")) k = k.centered(matrix_from(layer, "centering"));
        return k;
    });
}

Json to_json(const ErrorModel& error) {
    Json j;
    j["kind"] = error.name();
    switch (error.kind()) {
        case ErrorModel::Kind::iid: j["psi"] = error.psi(); break;
        case ErrorModel::Kind::ar1: j["alpha"] = error.alpha(); j["sigma"] = error.sigma(); break;
        case ErrorModel::Kind::ma1: j["theta"] = error.alpha(); j["sigma"] = error.sigma(); break;
    }
    return j;
}

ErrorModel error_model_from_json(const Json& j) {
    return guarded("error model", [&] {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "iid") return ErrorModel::iid(j.at("psi").get<double>());
        if (kind == "ar1") return ErrorModel::ar1(j.at("alpha").get<double>(), j.at("sigma").get<double>());
        if (kind == "ma1") return ErrorModel::ma1(j.at("theta").get<double>(), j.at("sigma").get<double>());
        throw ValidationError("unknown error model '" + kind + "'");
    });
}

Json to_json(const PriorMean& f0) {
    Json j;
    switch (f0.kind()) {
        case PriorMean::Kind::zero: j["kind"] = "zero"; break;
        case PriorMean::Kind::constant:
            j["kind"] = "constant";
            j["value"] = f0.constant_value();
            break;
        case PriorMean::Kind::response_mean: j["kind"] = "response_mean"; break;
        case PriorMean::Kind::values:
        case PriorMean::Kind::function:
            throw ValidationError("only zero and constant prior means can be stored in a model file");
    }
    return j;
}

PriorMean prior_mean_from_json(const Json& j) {
    return guarded("prior mean", [&] {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "zero") return PriorMean::zero();
        if (kind == "constant") return PriorMean::constant(j.at("value").get<double>());
        if (kind == "response_mean") return PriorMean::response_mean();
        throw ValidationError("unknown prior mean '" + kind + "'");
    });
}

Json model_to_json(const IPriorModel& model) {
    const FittedState& s = model.state();
    Json j;
    j["format"] = "iprior-model";
    j["version"] = kModelFormatVersion;
    j["form"] = s.form == PriorCovariance::fisher ? "fisher" : "kernel";
    j["lambda"] = s.lambda;
    j["kernel"] = to_json(s.kernel);
    j["error"] = to_json(s.error);
    j["prior_mean"] = to_json(s.f0);
    j["x_train"] = matrix_json(s.x_train);
    j["y"] = vector_json(s.y);
    j["weights"] = vector_json(s.posterior.weights);
    j["weight_covariance"] = matrix_json(s.posterior.weight_covariance);
    j["log_marginal"] = number(s.posterior.log_marginal);
    j["jitter"] = s.jitter;
    return j;
}

IPriorModel model_from_json(const Json& j) {
    return guarded("model", [&] {
        if (j.value("format", std::string()) != "iprior-model") throw ValidationError("not an iprior model document");
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw ValidationError("unsupported model format version " + std::to_string(version));
        }
        FittedState s;
        const auto form = j.at("form").get<std::string>();
        if (form != "fisher" && form != "kernel") throw ValidationError("unknown prior form '" + form + "'");
        s.form = form == "fisher" ? PriorCovariance::fisher : PriorCovariance::kernel;
        s.lambda = j.at("lambda").get<double>();
        s.kernel = kernel_from_json(j.at("kernel"));
        s.error = error_model_from_json(j.at("error"));
        s.f0 = prior_mean_from_json(j.at("prior_mean"));
        s.x_train = matrix_from(j.at("x_train"), "x_train");
        s.y = vector_from(j.at("y"), "y");
        s.posterior.weights = vector_from(j.at("weights"), "weights");
        s.posterior.weight_covariance = matrix_from(j.at("weight_covariance"), "weight_covariance");
        const Json& lm = j.at("log_marginal");
        s.posterior.log_marginal = lm.is_null() ? -INFINITY : lm.get<double>();
        s.jitter = j.at("jitter").get<double>();
        return IPriorModel::restore(std::move(s));
    });
}

Json to_json(const LocalMaximum& m) {
    Json j;
    j["log_lambda"] = m.log_lambda;
    j["log_psi"] = m.log_psi;
    j["lambda"] = std::exp(m.log_lambda);
    j["psi"] = std::exp(m.log_psi);
    j["log_likelihood"] = number(m.log_likelihood);
    j["boundary"] = m.boundary;
    j["certified"] = m.certified;
    j["start_index"] = m.start_index;
    j["evaluations"] = m.evaluations;
    return j;
}

Json to_json(const MlFit& fit) {
    Json j;
    Json maxima = Json::array();
    for (const auto& m : fit.maxima) maxima.push_back(to_json(m));
    j["maxima"] = maxima;
    j["diagnostics"] = {{"starts", fit.diagnostics.starts},
                        {"failed_starts", fit.diagnostics.failed_starts},
                        {"messages", fit.diagnostics.messages}};
    return j;
}

Json to_json(const CvSelection& cv) {
    Json j;
    j["selected"] = cv.index;
    Json table = Json::array();
    for (const auto& e : cv.table) {
        table.push_back({{"log_lambda", e.maximum.log_lambda},
                         {"log_psi", e.maximum.log_psi},
                         {"log_likelihood", number(e.maximum.log_likelihood)},
                         {"cv_error", number(e.cv_error)},
                         {"status", e.status}});
    }
    j["table"] = table;
    return j;
}

Json to_json(const FitReport& report) {
    Json j;
    j["format"] = "iprior-fit-report";
    j["version"] = kModelFormatVersion;
    j["method"] = report.method;
    j["ml"] = to_json(report.ml);
    j["cv"] = to_json(report.cv);
    j["chosen"] = to_json(report.chosen);
    if (report.model) {
        j["kernel"] = report.model->kernel().describe();
        j["error"] = report.model->error().describe();
    }
    return j;
}

Json to_json(const HyperSelection& sel) {
    Json j;
    j["selected"] = sel.hyper;
    Json table = Json::array();
    for (const auto& r : sel.table) {
        table.push_back({{"value", r.hyper},
                         {"cv_error", number(r.cv_error)},
                         {"chosen", to_json(r.chosen)},
                         {"status", r.status}});
    }
    j["table"] = table;
    return j;
}

Json to_json(const SeFit& fit) {
    Json j;
    j["format"] = "iprior-fit-report";
    j["version"] = kModelFormatVersion;
    j["method"] = "se_gpr";
    j["breakdown"] = fit.breakdown;
    if (!fit.message.empty()) j["message"] = fit.message;
    j["sigma"] = number(fit.sigma);
    j["chosen"] = to_json(fit.maximum);
    Json profile = Json::array();
    for (const auto& r : fit.profile) {
        profile.push_back({{"sigma", r.sigma}, {"log_likelihood", number(r.log_likelihood)}, {"status", r.status}});
    }
    j["profile"] = profile;
    return j;
}

}  // namespace iprior
