#include "iprior/serialization.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace iprior;

TEST_CASE("kernel and metric round trip") {
    std::mt19937_64 rng(1);
    const Matrix a = oracle::random_matrix(5, 2, rng), b = oracle::random_matrix(4, 2, rng);
    const Matrix m = oracle::random_spd(2, rng);
    for (const Kernel& k : {Kernel::canonical(), Kernel::fbm(0.3, Metric::mahalanobis(m)), Kernel::sqexp(0.4, 1.5),
                            Kernel::fbm(0.5).centered(a), Kernel::sqexp(0.7).centered(a).centered(b)}) {
        const Kernel back = kernel_from_json(Json::parse(to_json(k).dump()));
        CHECK(back.describe() == k.describe());
        CHECK((back.cross(a, b).array() == k.cross(a, b).array()).all());
    }
    const Metric s = metric_from_json(to_json(Metric::sobolev(0.25)));
    CHECK(s.kind() == Metric::Kind::sobolev);
    CHECK(s.spacing() == 0.25);
}

TEST_CASE("error model and prior mean round trip") {
    for (const ErrorModel& e : {ErrorModel::iid(2.5), ErrorModel::ar1(-0.3, 0.7), ErrorModel::ma1(0.4, 1.1)}) {
        const ErrorModel back = error_model_from_json(Json::parse(to_json(e).dump()));
        CHECK((back.precision_matrix(6).array() == e.precision_matrix(6).array()).all());
    }
    CHECK(prior_mean_from_json(to_json(PriorMean::constant(1.25))).kind() == PriorMean::constant(1.25).kind());
    CHECK_THROWS_AS(to_json(PriorMean::function([](const Vector&) { return 0.0; })), ValidationError);
}

TEST_CASE("saved model predicts identically") {
    std::mt19937_64 rng(2);
    const Matrix x = oracle::random_matrix(15, 2, rng);
    const Vector y = oracle::random_vector(15, rng);
    const Matrix q = oracle::random_matrix(6, 2, rng);
    for (const PriorCovariance form : {PriorCovariance::fisher, PriorCovariance::kernel}) {
        const IPriorModel m(Kernel::fbm(0.5).centered(x), ErrorModel::ar1(0.5, 0.9), 1.7, x, y,
                            PriorMean::response_mean(), form);
        const IPriorModel back = model_from_json(Json::parse(model_to_json(m).dump()));
        const Prediction p = m.predict(q), pb = back.predict(q);
        CHECK((p.mean - pb.mean).cwiseAbs().maxCoeff() <= 1e-12 * (1 + p.mean.cwiseAbs().maxCoeff()));
        CHECK((p.variance - pb.variance).cwiseAbs().maxCoeff() <= 1e-12 * (1 + p.variance.maxCoeff()));
    }
    Json bad = model_to_json(IPriorModel(Kernel::canonical(), ErrorModel::iid(1.0), 1.0, x, y));
    bad["version"] = kModelFormatVersion + 1;
    CHECK_THROWS_AS(model_from_json(bad), ValidationError);
}

TEST_CASE("fit report") {
    LocalMaximum m;
    m.log_lambda = 0.5;
    m.log_psi = -1;
    m.log_likelihood = -std::numeric_limits<double>::infinity();
    const Json j = to_json(m);
    CHECK(j["log_lambda"] == 0.5);
    CHECK(j["log_likelihood"].is_null());
    FitReport r;
    r.ml.maxima = {m};
    r.cv.table = {CvEntry{m, 0.25, "ok"}};
    r.chosen = m;
    const Json rj = to_json(r);
    CHECK(rj["method"] == "iprior");
    CHECK(rj.dump().find("maxima") != std::string::npos);
}
