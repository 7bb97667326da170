#include "iprior/error_models.hpp"
#include "iprior/linalg.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace iprior;

TEST_CASE("iid and trivial AR(1)") {
    CHECK(max_abs(precision_matrix(ErrorModel::iid(2.0), 3) - 2.0 * Matrix::Identity(3, 3)) == 0.0);
    CHECK(max_abs(covariance_matrix(ErrorModel::iid(4.0), 3) - 0.25 * Matrix::Identity(3, 3)) < 1e-15);
    CHECK(max_abs(precision_matrix(ErrorModel::ar1(0.0, 1.0), 3) - Matrix::Identity(3, 3)) == 0.0);
    CHECK_THROWS_AS(ErrorModel::iid(0.0), ValidationError);
    CHECK_THROWS_AS(ErrorModel::ar1(1.5, 1.0), ValidationError);
    CHECK_THROWS_AS(ErrorModel::ar1(0.5, 0.0), ValidationError);
    CHECK_THROWS_AS(ErrorModel::ma1(0.5, -1.0), ValidationError);
}

TEST_CASE("AR(1) matrices against the recursion") {
    for (const double a : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
        for (const double s : {0.5, 1.0, 2.0}) {
            const int n = 40;
            const ErrorModel m = ErrorModel::ar1(a, s);
            const Matrix cov = oracle::ar1_covariance(a, s, n);
            CHECK(oracle::rel_err(m.covariance_matrix(n), cov) < 1e-12);
            CHECK(max_abs(m.precision_matrix(n) * cov - Matrix::Identity(n, n)) < 1e-8);
            // tridiagonal precision
            const Matrix p = m.precision_matrix(n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (std::abs(i - j) > 1) CHECK(p(i, j) == 0.0);
        }
    }
    const Matrix p = precision_matrix(ErrorModel::ar1(0.5, 1.0), 3);
    CHECK(max_abs(p * covariance_matrix(ErrorModel::ar1(0.5, 1.0), 3) - Matrix::Identity(3, 3)) < 1e-10);
}

TEST_CASE("random walk limit") {
    const ErrorModel rw = ErrorModel::ar1(1.0, 1.0);
    CHECK(rw.is_unit_root());
    Matrix want(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) want(i, j) = std::min(i, j) + 1;
    CHECK(max_abs(rw.covariance_matrix(3) - want) < 1e-14);
}

TEST_CASE("MA(1) matrices and the AR/MA duality") {
    for (const double a : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
        const int n = 60;
        const double s = 1.7;
        const ErrorModel ma = ErrorModel::ma1(-a, 1.0 / s);
        CHECK(oracle::rel_err(ma.covariance_matrix(n), oracle::ma1_covariance(-a, 1.0 / s, n)) < 1e-12);
        CHECK(oracle::rel_err(ma.covariance_matrix(n), ErrorModel::ar1(a, s).precision_matrix(n)) < 1e-12);
        CHECK(max_abs(ma.precision_matrix(n) * ma.covariance_matrix(n) - Matrix::Identity(n, n)) < 1e-8);
        CHECK(oracle::rel_err(ma.precision_matrix(n), oracle::inverse(oracle::ma1_covariance(-a, 1.0 / s, n))) < 1e-8);
    }
}

TEST_CASE("precision matrices are symmetric PSD") {
    for (const ErrorModel& m : {ErrorModel::iid(3.0), ErrorModel::ar1(0.7, 0.4), ErrorModel::ma1(1.3, 2.0)}) {
        const Matrix p = m.precision_matrix(25);
        CHECK(max_abs(p - p.transpose()) < 1e-12 * max_abs(p));
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(p).eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("closed-form AR(1) norm") {
    Vector w(2);
    w << 1, 1;
    CHECK(ar1_fn_norm_squared(w, ErrorModel::ar1(0.5, 1.0)) == doctest::Approx(3.25));

    std::mt19937_64 rng(4);
    for (const double a : {-0.9, 0.0, 0.5, 1.0}) {
        for (const double s : {1.0, 0.3, 2.5}) {
            const Vector v = oracle::random_vector(30, rng);
            const double want = v.dot(oracle::ar1_covariance(a, s, 30) * v);
            CHECK(ar1_fn_norm_squared(v, ErrorModel::ar1(a, s)) == doctest::Approx(want).epsilon(1e-10));
        }
        const Vector v = oracle::random_vector(10, rng);
        if (a == 0.0) CHECK(ar1_fn_norm_squared(v, ErrorModel::ar1(a, 1.0)) == doctest::Approx(v.squaredNorm()));
        if (a == 1.0) {
            double want = 0;
            for (int i = 0; i < 10; ++i) want += std::pow(v.tail(10 - i).sum(), 2);
            CHECK(ar1_fn_norm_squared(v, ErrorModel::ar1(a, 1.0)) == doctest::Approx(want).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(ar1_fn_norm_squared(w, ErrorModel::iid(1.0)), ValidationError);
}

TEST_CASE("precision scale") {
    CHECK(ErrorModel::iid(3.0).precision_scale() == 3.0);
    CHECK(ErrorModel::ar1(0.2, 0.5).precision_scale() == doctest::Approx(4.0));
    const ErrorModel m = ErrorModel::ar1(0.2, 0.5).with_precision_scale(16.0);
    CHECK(m.sigma() == doctest::Approx(0.25));
    CHECK(m.alpha() == 0.2);
}
