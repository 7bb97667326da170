#pragma once

// Brute-force reference implementations used as test oracles. Written from
// the defining formulas with plain loops and LU factorizations; they share
// no code with the library beyond the Eigen types.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline double fbm(const Vec& x, const Vec& xp, double gamma) {
    const double a = std::pow((x - xp).norm(), 2 * gamma);
    const double b = std::pow(x.norm(), 2 * gamma);
    const double c = std::pow(xp.norm(), 2 * gamma);
    return -0.5 * (a - b - c);
}

inline double sqexp(const Vec& x, const Vec& xp, double sigma, double xi = 1.0) {
    return std::exp(-std::pow((x - xp).norm(), 2 * xi) / (2 * sigma * sigma));
}

using Fn = std::function<double(const Vec&, const Vec&)>;

inline Mat gram(const Fn& h, const Mat& x) {
    Mat g(x.rows(), x.rows());
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.rows(); ++j) g(i, j) = h(x.row(i).transpose(), x.row(j).transpose());
    return g;
}

/// h(x,x') - mean_i h(x,a_i) - mean_j h(x',a_j) + mean_ij h(a_i,a_j), by loops.
inline double centered(const Fn& h, const Mat& a, const Vec& x, const Vec& xp) {
    const int n = static_cast<int>(a.rows());
    double s1 = 0, s2 = 0, s3 = 0;
    for (int i = 0; i < n; ++i) {
        s1 += h(x, a.row(i).transpose());
        s2 += h(xp, a.row(i).transpose());
        for (int j = 0; j < n; ++j) s3 += h(a.row(i).transpose(), a.row(j).transpose());
    }
    return h(x, xp) - s1 / n - s2 / n + s3 / (double(n) * n);
}

/// Centered Brownian motion kernel written as the double sum over the design.
inline double cbm(const Vec& pts, double x, double xp) {
    const int n = static_cast<int>(pts.size());
    double s = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            s += std::abs(x - xp) - std::abs(x - pts(i)) - std::abs(xp - pts(j)) + std::abs(pts(i) - pts(j));
    return -s / (2.0 * n * n);
}

inline Mat inverse(const Mat& a) { return a.fullPivLu().inverse(); }

inline double log_abs_det(const Mat& a) {
    const Eigen::PartialPivLU<Mat> lu(a);
    const Mat u = lu.matrixLU();
    double s = 0;
    for (int i = 0; i < u.rows(); ++i) s += std::log(std::abs(u(i, i)));
    return s;
}

/// Gaussian log-density of r under N(0, v).
inline double gaussian_logpdf(const Vec& r, const Mat& v) {
    const double n = static_cast<double>(r.size());
    return -0.5 * n * std::log(2 * M_PI) - 0.5 * log_abs_det(v) - 0.5 * r.dot(v.fullPivLu().solve(r));
}

/// AR(1): eps_1 = e_1, eps_i = alpha eps_{i-1} + e_i, Var e = s^2; built from the recursion.
inline Mat ar1_covariance(double alpha, double s, int n) {
    Mat a = Mat::Zero(n, n);  // eps = A e
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) a(i, j) = std::pow(alpha, i - j);
    return s * s * a * a.transpose();
}

/// MA(1): eps_i = z_i + theta z_{i+1}, eps_n = z_n, Var z = s^2.
inline Mat ma1_covariance(double theta, double s, int n) {
    Mat c = Mat::Identity(n, n);
    for (int i = 0; i + 1 < n; ++i) c(i, i + 1) = theta;
    return s * s * c * c.transpose();
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2 * h);
}

inline Mat random_spd(int n, std::mt19937_64& rng, double ridge = 0.5) {
    std::normal_distribution<double> z;
    Mat b(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b(i, j) = z(rng);
    return b * b.transpose() / n + ridge * Mat::Identity(n, n);
}

inline Mat random_matrix(int r, int c, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = z(rng);
    return m;
}

inline Vec random_vector(int n, std::mt19937_64& rng) { return random_matrix(n, 1, rng).col(0); }

inline double rel_err(const Mat& got, const Mat& want) {
    const double scale = std::max(want.cwiseAbs().maxCoeff(), 1e-300);
    return (got - want).cwiseAbs().maxCoeff() / scale;
}

}  // namespace oracle
