#include "iprior/simulation.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace iprior;

namespace {

Matrix pinv(const Matrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const double cut = 1e-10 * es.eigenvalues().cwiseAbs().maxCoeff();
    Vector inv = es.eigenvalues();
    for (Index i = 0; i < inv.size(); ++i) inv(i) = inv(i) > cut ? 1 / inv(i) : 0.0;
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

TEST_CASE("design and kernel") {
    const Matrix x = unit_grid(5);
    CHECK(x(0, 0) == 0.0);
    CHECK(x(4, 0) == 1.0);
    CHECK(x(2, 0) == doctest::Approx(0.5));
    const Matrix h = gram(centered_brownian_kernel(x), x).values;
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j) CHECK(h(i, j) == doctest::Approx(oracle::cbm(x.col(0), x(i, 0), x(j, 0))).epsilon(1e-12));
}

TEST_CASE("matrix power") {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 4;
    d(1, 1) = 9;
    const Matrix r = matrix_power(d, 0.5);
    CHECK(r(0, 0) == doctest::Approx(2.0));
    CHECK(r(1, 1) == doctest::Approx(3.0));
    CHECK(std::abs(r(0, 1)) < 1e-12);

    std::mt19937_64 rng(1);
    const Matrix a = oracle::random_spd(12, rng);
    CHECK(oracle::rel_err(matrix_power(a, 1.0), a) < 1e-10);
    const Matrix half = matrix_power(a, 0.5);
    CHECK(oracle::rel_err(half * half, a) < 1e-8);
    CHECK(oracle::rel_err(half, half.transpose()) < 1e-14);
    const Matrix q = matrix_power(a, 0.75);
    CHECK(oracle::rel_err(q * q * q * q, a * a * a) < 1e-8);

    Matrix skew = a;
    skew(0, 1) += 1e-3;
    CHECK_THROWS_AS(matrix_power(skew, 0.5), ValidationError);
    CHECK_THROWS_AS(matrix_power(a, 0.0), ValidationError);
    CHECK_THROWS_AS(matrix_power(a, 1.5), ValidationError);

    // singular PSD input keeps its null space
    const Matrix h = gram(centered_brownian_kernel(unit_grid(20)), unit_grid(20)).values;
    const Matrix hq = matrix_power(h, 0.75);
    CHECK((hq * Vector::Ones(20)).norm() < 1e-8);
}

TEST_CASE("truth generation") {
    const Index n = 50;
    const Matrix x = unit_grid(n);
    const GramMatrix h = gram(centered_brownian_kernel(x), x);
    const Matrix hp = pinv(h.values);
    for (const TruthKind kind : {TruthKind::rough, TruthKind::iprior_path, TruthKind::se_path}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            std::mt19937_64 rng(seed);
            const TruthDraw t = gen_truth(kind, h, x, rng);
            CHECK(std::abs(std::sqrt(t.f.dot(hp * t.f)) - 1) <= 1e-6);
            CHECK(std::abs(t.f.sum()) <= 1e-8 * n);
            std::mt19937_64 again(seed);
            CHECK((gen_truth(kind, h, x, again).f.array() == t.f.array()).all());
            if (kind == TruthKind::iprior_path) {
                // f = H w / s, so f^T H^+ f = w^T H w / s^2
                CHECK(t.f.dot(hp * t.f) == doctest::Approx(t.w.dot(h.values * t.w) / (t.scale * t.scale)).epsilon(1e-8));
                CHECK(oracle::rel_err(t.f, h.values * t.w / t.scale) < 1e-8);
            }
        }
    }
}

TEST_CASE("norms and MAE") {
    const Matrix h = gram(centered_brownian_kernel(unit_grid(2)), unit_grid(2)).values;
    Vector d(2);
    d << 3, 4;
    CHECK(mae({d}, NormKind::l2, h, ErrorModel::iid(1.0)) == doctest::Approx(std::sqrt(12.5)));
    CHECK(mae({Vector::Zero(2), Vector::Zero(2)}, NormKind::l2, h, ErrorModel::iid(1.0)) == 0.0);
    CHECK(median({3, 1, 2}) == 2.0);
    CHECK(median({4, 1, 2, 3}) == 2.5);
    CHECK_THROWS(mae({}, NormKind::l2, h, ErrorModel::iid(1.0)));

    const Index n = 30;
    const Matrix x = unit_grid(n);
    const Matrix hn = gram(centered_brownian_kernel(x), x).values;
    const Matrix hp = pinv(hn);
    std::mt19937_64 rng(2);
    Vector delta = oracle::random_vector(n, rng);
    delta.array() -= delta.mean();
    const ErrorModel e = ErrorModel::iid(4.0);
    const NormEvaluator norm(hn, e);
    CHECK(norm(delta, NormKind::l2) == doctest::Approx(std::sqrt(delta.squaredNorm() / n)));
    CHECK(norm(delta, NormKind::f) == doctest::Approx(std::sqrt(delta.dot(hp * delta))).epsilon(1e-8));
    const Vector w = hp * delta;
    CHECK(norm(delta, NormKind::fn) == doctest::Approx(std::sqrt(w.squaredNorm() / 4.0)).epsilon(1e-8));
    CHECK(mae({delta}, NormKind::f, hn, e) == doctest::Approx(norm(delta, NormKind::f)));
}

TEST_CASE("config validation and names") {
    StudyConfig c;
    CHECK_NOTHROW(c.validate());
    c.replicates = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = StudyConfig{};
    c.sds = {0.1, -1};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    CHECK(parse_truth(to_string(TruthKind::se_path)) == TruthKind::se_path);
    CHECK(parse_estimator(to_string(Estimator::tikhonov)) == Estimator::tikhonov);
    CHECK_THROWS_AS(parse_truth("smooth"), ValidationError);
}

TEST_CASE("study smoke run") {
    StudyConfig c;
    c.n = 10;
    c.replicates = 1;
    c.truths = {TruthKind::rough};
    c.sds = {0.1, 0.5};
    const StudyResult r = run_study(c);
    CHECK(r.rows.size() == 2 * 3 * 3);
    for (const StudyRow& row : r.rows) {
        CHECK(row.mae >= 0);
        CHECK(row.baseline >= 0);
    }
    CHECK_NOTHROW(r.find(TruthKind::rough, 0.5, Estimator::se, NormKind::f));
    CHECK_THROWS_AS(r.find(TruthKind::se_path, 0.5, Estimator::se, NormKind::f), std::out_of_range);
    const std::string csv = study_csv(r);
    CHECK(csv.rfind("truth,sd,estimator,norm,mae,baseline,breakdowns\n", 0) == 0);
    CHECK(study_manifest(c).find("\"seed\"") != std::string::npos);
}

TEST_CASE("study invariants") {
    StudyConfig c;
    c.n = 30;
    c.replicates = 6;
    c.truths = {TruthKind::rough, TruthKind::iprior_path};
    c.sds = {0.05, 0.2, 1.0};
    c.estimators = {Estimator::iprior, Estimator::tikhonov};
    c.threads = 1;
    const StudyResult one = run_study(c);
    c.threads = 3;
    const StudyResult three = run_study(c);
    CHECK(study_csv(one) == study_csv(three));

    for (const TruthKind t : c.truths) {
        double last = 0;
        for (const double sd : c.sds) {
            const StudyRow& a = one.find(t, sd, Estimator::iprior, NormKind::l2);
            const StudyRow& b = one.find(t, sd, Estimator::tikhonov, NormKind::l2);
            CHECK(a.baseline == b.baseline);
            CHECK(a.baseline >= last);
            last = a.baseline;
            CHECK(a.breakdowns == 0);
        }
    }
    // the baseline is the median L2 norm of the truths themselves
    const StudyRow& row = one.find(TruthKind::rough, 0.2, Estimator::iprior, NormKind::l2);
    CHECK(row.baseline > 0);
    CHECK(row.baseline < 1);
}

TEST_CASE("I-prior beats Tikhonov on I-prior paths") {
    StudyConfig c;
    c.truths = {TruthKind::iprior_path};
    c.sds = {0.05, 0.5};
    c.estimators = {Estimator::iprior, Estimator::tikhonov};
    c.replicates = 50;
    const StudyResult r = run_study(c);
    for (const double sd : c.sds)
        CHECK(r.find(TruthKind::iprior_path, sd, Estimator::iprior, NormKind::l2).mae <=
              r.find(TruthKind::iprior_path, sd, Estimator::tikhonov, NormKind::l2).mae);
}
