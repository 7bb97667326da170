#include "iprior/baselines.hpp"
#include "iprior/parallel.hpp"
#include "iprior/simulation.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace iprior;

namespace {

Matrix line(Index n) {
    Matrix x(n, 1);
    for (Index i = 0; i < n; ++i) x(i, 0) = (i + 0.5) / static_cast<double>(n);
    return x;
}

Vector mean_vector(const Vector& y) { return Vector::Constant(y.size(), y.mean()); }

double spread(const Vector& v) { return std::sqrt((v.array() - v.mean()).square().mean()); }

}  // namespace

TEST_CASE("Tikhonov limits") {
    const Matrix x = line(25);
    std::mt19937_64 rng(1);
    const Vector y = oracle::random_vector(25, rng);
    const Matrix h = gram(Kernel::fbm(0.5).centered(x), x).values;
    const Vector f0 = mean_vector(y);
    const TikhonovFit loose = tikhonov_fit(h, ErrorModel::iid(1.0), 1e10, y, f0);
    CHECK((loose.fitted - y).cwiseAbs().maxCoeff() < 1e-6);
    const TikhonovFit tight = tikhonov_fit(h, ErrorModel::iid(1.0), 1e-12, y, f0);
    CHECK((tight.fitted - f0).cwiseAbs().maxCoeff() < 1e-9);
    CHECK_THROWS_AS(tikhonov_fit(h, ErrorModel::iid(1.0), 0.0, y, f0), ValidationError);
}

TEST_CASE("Tikhonov solution satisfies the first-order condition") {
    std::mt19937_64 rng(2);
    for (const ErrorModel& e : {ErrorModel::iid(2.0), ErrorModel::ar1(0.5, 1.0), ErrorModel::ma1(0.3, 0.7)}) {
        const Matrix x = oracle::random_matrix(30, 2, rng);
        const Vector y = oracle::random_vector(30, rng);
        const Vector f0 = Vector::Constant(30, 0.1);
        const double lambda = 0.6;
        const Matrix h = gram(Kernel::fbm(0.5).centered(x), x).values;
        const TikhonovFit t = tikhonov_fit(h, e, lambda, y, f0);
        const Matrix psi = e.precision_matrix(30);
        const Vector w = t.weights;
        // d/dw of (r - Hw)^T Psi (r - Hw) + lambda^{-1} w^T H w
        const Vector grad = -2 * h * psi * (y - f0 - h * w) + 2 / lambda * h * w;
        CHECK(grad.norm() <= 1e-8 * y.norm());
        CHECK(oracle::rel_err(t.fitted, f0 + h * w) < 1e-12);

        const Matrix s = tikhonov_smoother(h, e, lambda);
        CHECK(oracle::rel_err(t.fitted, f0 + s * (y - f0)) < 1e-9);
        CHECK(t.smoother_trace == doctest::Approx(s.trace()).epsilon(1e-10));

        // posterior mean under the GP prior with covariance lambda h
        const IPriorModel gp(Kernel::fbm(0.5).centered(x), e, lambda, x, y, PriorMean::constant(0.1),
                             PriorCovariance::kernel);
        CHECK(oracle::rel_err(t.fitted, gp.fitted()) < 1e-9);
    }
}

TEST_CASE("Tikhonov is a linear smoother") {
    std::mt19937_64 rng(3);
    const Matrix x = line(40);
    const Matrix h = gram(Kernel::fbm(0.5).centered(x), x).values;
    const Vector zero = Vector::Zero(40);
    const Vector y1 = oracle::random_vector(40, rng), y2 = oracle::random_vector(40, rng);
    const ErrorModel e = ErrorModel::ar1(0.4, 2.0);
    const Vector a = tikhonov_fit(h, e, 3.0, y1, zero).fitted;
    const Vector b = tikhonov_fit(h, e, 3.0, y2, zero).fitted;
    const Vector ab = tikhonov_fit(h, e, 3.0, y1 + y2, zero).fitted;
    CHECK((ab - a - b).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("GCV score two ways") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 10; ++t) {
        const Matrix x = oracle::random_matrix(30, 1, rng);
        const GramMatrix g = gram(Kernel::fbm(0.5).centered(x), x);
        const Vector y = oracle::random_vector(30, rng);
        const double psi = 0.5 + t, lambda = std::pow(10.0, t - 5);
        const double a = gcv_score(g.values, ErrorModel::iid(psi), lambda, y, mean_vector(y));
        const double b = gcv_score_spectral(g, psi, lambda, y, mean_vector(y));
        CHECK(a == doctest::Approx(b).epsilon(1e-8));
        // hat matrix oracle
        const Matrix s = lambda * g.values * oracle::inverse(lambda * g.values + Matrix::Identity(30, 30) / psi);
        const Matrix i_s = Matrix::Identity(30, 30) - s;
        const Vector r = y - mean_vector(y);
        CHECK(a == doctest::Approx(30 * (i_s * r).squaredNorm() / std::pow(i_s.trace(), 2)).epsilon(1e-8));

        // mean fitted alongside: smoother S + (I - S) J
        const Matrix j = Matrix::Constant(30, 30, 1.0 / 30);
        const Matrix i_t = Matrix::Identity(30, 30) - (s + i_s * j);
        const double want = 30 * (i_t * y).squaredNorm() / std::pow(i_t.trace(), 2);
        const Vector f0 = Vector::Constant(30, 0.25);
        CHECK(gcv_score(g.values, ErrorModel::iid(psi), lambda, y, f0, true) == doctest::Approx(want).epsilon(1e-8));
        CHECK(gcv_score_spectral(g, psi, lambda, y, f0, true) == doctest::Approx(want).epsilon(1e-8));
    }
}

TEST_CASE("GCV selection") {
    const Matrix x = line(50);
    const Matrix h = gram(Kernel::fbm(0.5).centered(x), x).values;
    const std::vector<double> grid = log_grid(1e-6, 1e6, 25);
    CHECK(grid.size() == 25);
    CHECK(grid.front() == doctest::Approx(1e-6));
    CHECK(grid.back() == doctest::Approx(1e6));

    std::mt19937_64 rng(5);
    const Vector y = oracle::random_vector(50, rng);
    CHECK(gcv_select(h, ErrorModel::iid(1.0), {0.3}, y, mean_vector(y)).lambda == 0.3);
    CHECK_THROWS_AS(gcv_select(h, ErrorModel::iid(1.0), {}, y, mean_vector(y)), ValidationError);

    int noise_low = 0, smooth_high = 0;
    const int reps = 15;
    for (int rep = 0; rep < reps; ++rep) {
        std::mt19937_64 r(derive_seed(5, {static_cast<std::uint64_t>(rep)}));
        std::normal_distribution<double> z(0, 1);
        Vector noise(50);
        for (Index i = 0; i < 50; ++i) noise(i) = z(r);
        const GcvSelection a = gcv_select(h, ErrorModel::iid(1.0), grid, noise, mean_vector(noise), false, true);
        if (a.lambda <= grid[3]) ++noise_low;

        Vector clean(50);
        const double phase = z(r);
        for (Index i = 0; i < 50; ++i) clean(i) = std::sin(2 * M_PI * x(i, 0) + phase);
        const GcvSelection b = gcv_select(h, ErrorModel::iid(1.0), grid, clean, mean_vector(clean), false, true);
        if (b.lambda >= grid[grid.size() - 4]) ++smooth_high;
    }
    CHECK(noise_low > reps / 2);
    CHECK(smooth_high > reps / 2);

    // refinement never does worse than the grid
    const Vector noisy = [&] {
        Vector v(50);
        for (Index i = 0; i < 50; ++i) v(i) = std::sin(6 * x(i, 0)) + 0.3 * y(i);
        return v;
    }();
    const GcvSelection coarse = gcv_select(h, ErrorModel::iid(1.0), grid, noisy, mean_vector(noisy), false);
    const GcvSelection fine = gcv_select(h, ErrorModel::iid(1.0), grid, noisy, mean_vector(noisy), true);
    CHECK(fine.score <= coarse.score + 1e-12);
    CHECK(fine.table.size() == grid.size());
}

TEST_CASE("SE marginal likelihood matches the dense oracle") {
    std::mt19937_64 rng(6);
    const Matrix x = oracle::random_matrix(20, 1, rng);
    const Vector y = oracle::random_vector(20, rng);
    const double sigma = 0.3, lambda = 1.7, psi = 3.0;
    const IPriorModel m(Kernel::sqexp(sigma), ErrorModel::iid(psi), lambda, x, y, PriorMean::zero(),
                        PriorCovariance::kernel);
    const Matrix k = oracle::gram([&](const oracle::Vec& a, const oracle::Vec& b) { return oracle::sqexp(a, b, sigma); }, x);
    const Matrix v = lambda * k + Matrix::Identity(20, 20) / psi;
    CHECK(m.posterior().log_marginal == doctest::Approx(oracle::gaussian_logpdf(y, v)).epsilon(1e-9));

    const IPriorModel tiny(Kernel::sqexp(sigma), ErrorModel::iid(psi), 1e-14, x, y, PriorMean::constant(0.4),
                           PriorCovariance::kernel);
    CHECK((tiny.fitted().array() - 0.4).abs().maxCoeff() < 1e-10);
}

TEST_CASE("SE fit with a large length scale flattens") {
    const Matrix x = line(30);
    std::mt19937_64 rng(7);
    const Vector y = oracle::random_vector(30, rng);
    double last = std::numeric_limits<double>::infinity();
    for (const double sigma : {0.05, 0.2, 1.0, 5.0, 25.0, 125.0}) {
        const IPriorModel m(Kernel::sqexp(sigma), ErrorModel::iid(1.0), 1.0, x, y, PriorMean::response_mean(),
                            PriorCovariance::kernel);
        const double s = spread(m.fitted());
        CHECK(s < last);
        last = s;
    }
    CHECK(last < 1e-3);
}

TEST_CASE("SE estimator fit") {
    const Matrix x = line(40);
    Vector y(40);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z(0, 0.05);
    for (Index i = 0; i < 40; ++i) y(i) = std::exp(-std::pow(x(i, 0) - 0.5, 2) / 0.02) + z(rng);
    SeConfig c;
    c.inner.starts = {{-2, 5}, {0, 6}, {2, 4}};
    const SeFit fit = se_gpr_fit(x, y, ErrorModel::iid(1.0), PriorMean::response_mean(), c);
    REQUIRE(!fit.breakdown);
    REQUIRE(fit.model);
    CHECK(fit.sigma > 0.02);
    CHECK(fit.sigma < 0.5);
    CHECK(fit.profile.size() >= c.sigma_grid.size());
    CHECK(std::sqrt((fit.model->fitted() - y).squaredNorm() / 40) < 0.1);

    Vector bad = y;
    bad(0) = std::numeric_limits<double>::infinity();
    SeFit broken;
    CHECK_NOTHROW(broken = se_gpr_fit(x, bad, ErrorModel::iid(1.0), PriorMean::response_mean(), c));
    CHECK(broken.breakdown);
    CHECK(!broken.message.empty());
}

TEST_CASE("SE beats the I-prior on rough-length-scale SE paths at low noise") {
    StudyConfig c;
    c.truths = {TruthKind::se_path};
    c.sds = {0.02};
    c.estimators = {Estimator::iprior, Estimator::se};
    c.replicates = 10;
    const StudyResult r = run_study(c);
    CHECK(r.find(TruthKind::se_path, 0.02, Estimator::se, NormKind::l2).mae <
          r.find(TruthKind::se_path, 0.02, Estimator::iprior, NormKind::l2).mae);
}

TEST_CASE("g-prior and I-prior covariances") {
    const Matrix ones = Matrix::Ones(12, 1);
    CHECK(gprior_covariance(ones, ErrorModel::iid(1.0), 3.0)(0, 0) == doctest::Approx(3.0 / 12));
    CHECK(iprior_linear_covariance(ones, ErrorModel::iid(1.0), 2.0)(0, 0) == doctest::Approx(24.0));
    CHECK(gprior_covariance(ones, ErrorModel::iid(1.0), 0.0).isZero());

    Matrix deficient(10, 3);
    std::mt19937_64 rng(9);
    deficient.leftCols(2) = oracle::random_matrix(10, 2, rng);
    deficient.col(2) = deficient.col(0) + deficient.col(1);
    CHECK_THROWS_AS(gprior_covariance(deficient, ErrorModel::iid(1.0), 1.0), NumericalError);
    const Matrix c = iprior_linear_covariance(deficient, ErrorModel::iid(1.0), 1.0);
    CHECK(c.allFinite());
    CHECK(oracle::rel_err(c, deficient.transpose() * deficient) < 1e-12);

    const ErrorModel e = ErrorModel::ar1(0.3, 2.0);
    const Matrix x = oracle::random_matrix(20, 3, rng);
    const Matrix info = x.transpose() * e.precision_matrix(20) * x;
    CHECK(oracle::rel_err(gprior_covariance(x, e, 1.5), 1.5 * oracle::inverse(info)) < 1e-10);
}

TEST_CASE("Mahalanobis I-prior is the standard g-prior") {
    std::mt19937_64 rng(10);
    const Matrix x = oracle::random_matrix(20, 3, rng);
    const ErrorModel e = ErrorModel::iid(2.0);
    const Matrix m = oracle::inverse(x.transpose() * e.precision_matrix(20) * x);
    const double lambda = 0.7;
    const Matrix c = iprior_linear_covariance(x, e, lambda, m);
    CHECK(oracle::rel_err(c, gprior_covariance(x, e, lambda * lambda)) < 1e-8);

    // the same covariance read off the Fisher kernel at unit vectors
    const FisherKernel hn(Kernel::canonical(Metric::mahalanobis(m)), e, x);
    Matrix from_kernel(3, 3);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            from_kernel(a, b) = lambda * lambda * hn(Vector::Unit(3, a), Vector::Unit(3, b));
    CHECK(oracle::rel_err(from_kernel, c) < 1e-8);
}
