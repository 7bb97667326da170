#include "iprior/iprior_core.hpp"

#include "iprior/linalg.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace iprior {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

void check_sizes(const Matrix& h, const Vector& y, const Vector& f0) {
    if (h.rows() != h.cols()) throw ValidationError("kernel matrix must be square");
    if (y.size() != h.rows() || f0.size() != h.rows()) {
        std::ostringstream msg;
        msg << "size mismatch: H is " << h.rows() << "x" << h.cols() << ", y has " << y.size()
            << ", f0 has " << f0.size();
        throw ValidationError(msg.str());
    }
}

std::string param_context(double lambda, const ErrorModel& error) {
    std::ostringstream s;
    s << "V_y at lambda=" << lambda << ", " << error.describe();
    return s.str();
}

}  // namespace

// ---------------------------------------------------------------- PriorMean

PriorMean PriorMean::zero() { return PriorMean{}; }

PriorMean PriorMean::constant(double c) {
    PriorMean m;
    m.kind_ = Kind::constant;
    m.constant_ = c;
    return m;
}

PriorMean PriorMean::response_mean() {
    PriorMean m;
    m.kind_ = Kind::response_mean;
    return m;
}

PriorMean PriorMean::values(Vector v) {
    PriorMean m;
    m.kind_ = Kind::values;
    m.values_ = std::move(v);
    return m;
}

PriorMean PriorMean::function(Function f) {
    if (!f) throw ValidationError("prior mean function is empty");
    PriorMean m;
    m.kind_ = Kind::function;
    m.function_ = std::move(f);
    return m;
}

PriorMean PriorMean::resolved(const Vector& y) const {
    if (kind_ != Kind::response_mean) return *this;
    if (y.size() == 0) throw ValidationError("response-mean prior needs at least one response");
    return constant(y.mean());
}

Vector PriorMean::at_training(const Matrix& x, const Vector& y) const {
    const Index n = x.rows();
    switch (kind_) {
        case Kind::zero: return Vector::Zero(n);
        case Kind::constant: return Vector::Constant(n, constant_);
        case Kind::response_mean: return resolved(y).at_training(x, y);
        case Kind::values:
            if (values_.size() != n) throw ValidationError("prior mean values do not match the training size");
            return values_;
        case Kind::function: return at(x);
    }
    return {};
}

Vector PriorMean::at(const Matrix& x) const {
    const Index n = x.rows();
    switch (kind_) {
        case Kind::zero: return Vector::Zero(n);
        case Kind::constant: return Vector::Constant(n, constant_);
        case Kind::response_mean:
            throw ValidationError("response-mean prior must be resolved before evaluating at new points");
        case Kind::values:
            throw ValidationError("prior mean given only at training points cannot be evaluated at new points");
        case Kind::function: {
            Vector out(n);
            for (Index i = 0; i < n; ++i) out(i) = function_(x.row(i).transpose());
            return out;
        }
    }
    return {};
}

PriorMean PriorMean::subset(const std::vector<Index>& idx) const {
    if (kind_ != Kind::values) return *this;
    Vector v(static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) v(static_cast<Index>(k)) = values_(idx[k]);
    return values(std::move(v));
}

// ---------------------------------------------------------------- likelihood

Matrix marginal_covariance(const Matrix& h, double lambda, const ErrorModel& error, PriorCovariance form) {
    const Index n = h.rows();
    Matrix v;
    if (form == PriorCovariance::fisher) {
        const Matrix psi = error.precision_matrix(n);
        v = lambda * lambda * (h * psi * h);
    } else {
        v = lambda * h;
    }
    v += error.covariance_matrix(n);
    return 0.5 * (v + v.transpose());
}

double log_marginal(double lambda, const ErrorModel& error, const Vector& y, const Matrix& h,
                    const Vector& f0, PriorCovariance form) {
    check_sizes(h, y, f0);
    const Vector r = y - f0;
    const CholeskySolver chol(marginal_covariance(h, lambda, error, form), param_context(lambda, error));
    const double n = static_cast<double>(y.size());
    return -0.5 * n * kLog2Pi - 0.5 * chol.log_determinant() - 0.5 * r.dot(chol.solve(r));
}

SpectralLikelihood::SpectralLikelihood(const GramMatrix& h, const Vector& residual, PriorCovariance form)
    : eig_(h.eigenvalues), form_(form) {
    if (residual.size() != h.size()) throw ValidationError("residual length does not match the Gram matrix");
    z2_ = (h.eigenvectors.transpose() * residual).array().square();
}

double SpectralLikelihood::operator()(double log_lambda, double log_psi) const {
    const double lambda = std::exp(log_lambda);
    const double psi = std::exp(log_psi);
    const double noise = 1.0 / psi;
    double logdet = 0.0;
    double quad = 0.0;
    for (Index k = 0; k < eig_.size(); ++k) {
        const double e = eig_(k);
        const double d = (form_ == PriorCovariance::fisher) ? lambda * lambda * psi * e * e + noise
                                                            : lambda * e + noise;
        logdet += std::log(d);
        quad += z2_(k) / d;
    }
    return -0.5 * static_cast<double>(eig_.size()) * kLog2Pi - 0.5 * logdet - 0.5 * quad;
}

Eigen::Vector2d SpectralLikelihood::gradient(double log_lambda, double log_psi) const {
    const double lambda = std::exp(log_lambda);
    const double psi = std::exp(log_psi);
    const double noise = 1.0 / psi;
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    for (Index k = 0; k < eig_.size(); ++k) {
        const double e = eig_(k);
        double d, dl, dp;
        if (form_ == PriorCovariance::fisher) {
            const double signal = lambda * lambda * psi * e * e;
            d = signal + noise;
            dl = 2.0 * signal;
            dp = signal - noise;
        } else {
            d = lambda * e + noise;
            dl = lambda * e;
            dp = -noise;
        }
        const double c = 0.5 * (z2_(k) / d - 1.0) / d;
        g(0) += c * dl;
        g(1) += c * dp;
    }
    return g;
}

// ---------------------------------------------------------------- model

IPriorModel::IPriorModel(Kernel kernel, ErrorModel error, double lambda, Matrix x_train, Vector y,
                         PriorMean f0, PriorCovariance form)
    : IPriorModel(std::move(kernel), std::move(error), lambda, std::move(x_train), std::move(y),
                  std::move(f0), form, nullptr) {}

IPriorModel::IPriorModel(Kernel kernel, ErrorModel error, double lambda, Matrix x_train, Vector y,
                         PriorMean f0, PriorCovariance form, std::shared_ptr<const GramMatrix> h) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("scale lambda must be positive and finite");
    if (x_train.rows() != y.size()) {
        std::ostringstream msg;
        msg << "training inputs have " << x_train.rows() << " rows but y has " << y.size() << " entries";
        throw ValidationError(msg.str());
    }
    if (y.size() == 0) throw ValidationError("cannot fit a model to zero observations");
    state_.kernel = std::move(kernel);
    state_.error = std::move(error);
    state_.lambda = lambda;
    state_.form = form;
    state_.x_train = std::move(x_train);
    state_.f0 = f0.resolved(y);
    state_.y = std::move(y);
    if (h) {
        if (h->size() != state_.y.size()) throw ValidationError("supplied Gram matrix has the wrong size");
        gram_ = std::move(h);
    } else {
        gram_ = std::make_shared<const GramMatrix>(iprior::gram(state_.kernel, state_.x_train));
    }
    fit();
}

IPriorModel::IPriorModel(FittedState state) : state_(std::move(state)) {}

IPriorModel IPriorModel::restore(FittedState state) {
    const Index n = state.x_train.rows();
    if (state.y.size() != n || state.posterior.weights.size() != n || state.posterior.weight_covariance.rows() != n ||
        state.posterior.weight_covariance.cols() != n) {
        throw ValidationError("stored model state has inconsistent sizes");
    }
    IPriorModel m(std::move(state));
    m.gram_ = std::make_shared<const GramMatrix>(iprior::gram(m.state_.kernel, m.state_.x_train));
    return m;
}

void IPriorModel::fit() {
    const Matrix& h = gram_->values;
    const Index n = h.rows();
    const Vector f0 = state_.f0.at_training(state_.x_train, state_.y);
    const Vector r = state_.y - f0;
    const double lambda = state_.lambda;

    const CholeskySolver chol(marginal_covariance(h, lambda, state_.error, state_.form),
                              param_context(lambda, state_.error));
    const Vector alpha = chol.solve(r);

    PosteriorSummary& post = state_.posterior;
    if (state_.form == PriorCovariance::fisher) {
        const Matrix psi = state_.error.precision_matrix(n);
        post.weights = lambda * (psi * (h * alpha));
    } else {
        post.weights = lambda * alpha;
    }
    post.weight_covariance = chol.inverse();
    post.log_marginal = -0.5 * static_cast<double>(n) * kLog2Pi - 0.5 * chol.log_determinant() - 0.5 * r.dot(alpha);
    state_.jitter = chol.jitter();
}

Vector IPriorModel::coefficients() const {
    return state_.form == PriorCovariance::fisher ? Vector(state_.lambda * state_.posterior.weights)
                                                  : state_.posterior.weights;
}

Vector IPriorModel::fitted() const {
    return state_.f0.at_training(state_.x_train, state_.y) + gram_->values * coefficients();
}

Prediction IPriorModel::predict(const Matrix& x_new) const {
    const Matrix k = cross_gram(state_.kernel, state_.x_train, x_new);  // m x n
    Prediction p;
    p.mean = state_.f0.at(x_new) + k * coefficients();
    const Matrix& vinv = state_.posterior.weight_covariance;
    const double l2 = state_.lambda * state_.lambda;
    const Vector quad = ((k * vinv).array() * k.array()).rowwise().sum();
    if (state_.form == PriorCovariance::fisher) {
        p.variance = l2 * quad;
    } else {
        p.variance.resize(x_new.rows());
        for (Index i = 0; i < x_new.rows(); ++i) {
            const Vector xi = x_new.row(i).transpose();
            p.variance(i) = state_.lambda * state_.kernel(xi, xi) - l2 * quad(i);
        }
    }
    p.variance = p.variance.unaryExpr([](double v) { return v > 0.0 ? v : 0.0; });
    return p;
}

PosteriorSummary posterior(const IPriorModel& model) { return model.posterior(); }

Prediction predict(const IPriorModel& model, const Matrix& x_new) { return model.predict(x_new); }

// ---------------------------------------------------------------- Fisher kernel

FisherKernel::FisherKernel(Kernel kernel, const ErrorModel& error, Matrix x_train)
    : kernel_(std::move(kernel)), x_train_(std::move(x_train)), psi_(error.precision_matrix(x_train_.rows())) {}

Matrix FisherKernel::cross(const Matrix& a, const Matrix& b) const {
    const Matrix ka = kernel_.cross(a, x_train_);
    const Matrix kb = kernel_.cross(b, x_train_);
    return ka * psi_ * kb.transpose();
}

double FisherKernel::operator()(const Vector& x, const Vector& xp) const {
    return cross(x.transpose(), xp.transpose())(0, 0);
}

double fisher_info_functional(const Vector& g_values, const ErrorModel& error) {
    const Matrix psi = error.precision_matrix(g_values.size());
    return g_values.dot(psi * g_values);
}

double fn_norm_squared(const Vector& w, const ErrorModel& error) {
    if (w.size() == 0) return 0.0;
    const CholeskySolver chol(error.precision_matrix(w.size()), "error precision " + error.describe());
    if (chol.jitter() > 0.0) throw NumericalError("error precision matrix is singular: " + error.describe());
    return w.dot(chol.solve(w));
}

Vector sample_prior(const Kernel& kernel, const ErrorModel& error, const Matrix& x_train, double lambda,
                    const PriorMean& f0, const Matrix& x_query, std::mt19937_64& rng) {
    const Index n = x_train.rows();
    const Matrix psi = error.precision_matrix(n);
    Eigen::LLT<Matrix> llt(psi);
    if (llt.info() != Eigen::Success) throw NumericalError("error precision is not positive definite");
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(n);
    for (Index i = 0; i < n; ++i) z(i) = normal(rng);
    const Vector w = llt.matrixL() * z;
    return f0.at(x_query) + lambda * (cross_gram(kernel, x_train, x_query) * w);
}

// ---------------------------------------------------------------- parameter information

namespace {

Matrix information_from_derivatives(const Matrix& v, const std::vector<Matrix>& dv) {
    const CholeskySolver chol(v, "V_y in parameter information");
    std::vector<Matrix> a;
    a.reserve(dv.size());
    for (const auto& d : dv) a.push_back(chol.solve(d));
    const Index k = static_cast<Index>(dv.size());
    Matrix u(k, k);
    for (Index i = 0; i < k; ++i) {
        for (Index j = i; j < k; ++j) {
            // tr(A_i A_j) = sum_pq A_i(p,q) A_j(q,p)
            const double t = (a[i].array() * a[j].transpose().array()).sum();
            u(i, j) = u(j, i) = 0.5 * t;
        }
    }
    return u;
}

}  // namespace

Matrix param_fisher_info(const Matrix& h, const Parameterization& param, const Vector& theta,
                         PriorCovariance form, double rel_step) {
    auto vy = [&](const Vector& t) {
        const auto [lambda, error] = param(t);
        return marginal_covariance(h, lambda, error, form);
    };
    std::vector<Matrix> dv;
    for (Index i = 0; i < theta.size(); ++i) {
        const double step = rel_step * std::max(std::abs(theta(i)), 1.0);
        Vector up = theta, down = theta;
        up(i) += step;
        down(i) -= step;
        dv.push_back((vy(up) - vy(down)) / (2.0 * step));
    }
    return information_from_derivatives(vy(theta), dv);
}

std::pair<Matrix, Matrix> marginal_covariance_derivatives_iid(const Matrix& h, double lambda, double psi,
                                                              PriorCovariance form) {
    const Index n = h.rows();
    if (form == PriorCovariance::fisher) {
        const Matrix signal = lambda * lambda * psi * (h * h);
        return {2.0 * signal, signal - Matrix::Identity(n, n) / psi};
    }
    return {lambda * h, -Matrix::Identity(n, n) / psi};
}

Matrix param_fisher_info_iid(const Matrix& h, double lambda, double psi, PriorCovariance form) {
    const auto [dl, dp] = marginal_covariance_derivatives_iid(h, lambda, psi, form);
    return information_from_derivatives(marginal_covariance(h, lambda, ErrorModel::iid(psi), form), {dl, dp});
}

Matrix asymptotic_covariance(const Matrix& u) {
    const auto eig = symmetric_eigen(0.5 * (u + u.transpose()));
    const double top = eig.values.cwiseAbs().maxCoeff();
    if (!(eig.values(0) > 1e-12 * top)) {
        std::ostringstream msg;
        msg << "parameter information matrix is singular (smallest eigenvalue " << eig.values(0)
            << ", largest " << top << ")";
        throw NumericalError(msg.str());
    }
    return eig.vectors * eig.values.cwiseInverse().asDiagonal() * eig.vectors.transpose();
}

// ---------------------------------------------------------------- Brownian smoothing

namespace {

Vector slopes(const Vector& x, const Vector& f) {
    if (x.size() != f.size()) throw ValidationError("design and function values differ in length");
    if (x.size() < 2) throw ValidationError("need at least two design points");
    const Index n = x.size();
    Vector s(n - 1);
    for (Index i = 0; i + 1 < n; ++i) {
        const double dx = x(i + 1) - x(i);
        if (!(dx > 0.0)) throw ValidationError("design points must be strictly increasing");
        s(i) = (f(i + 1) - f(i)) / dx;
    }
    return s;
}

}  // namespace

double brownian_norm_squared(const Vector& sorted_x, const Vector& f) {
    const Vector s = slopes(sorted_x, f);
    double total = 0.0;
    for (Index i = 0; i < s.size(); ++i) total += s(i) * (f(i + 1) - f(i));
    return total;
}

Vector brownian_weights(const Vector& sorted_x, const Vector& f) {
    const Vector s = slopes(sorted_x, f);
    const Index n = f.size();
    Vector w(n);
    w(0) = -s(0);
    for (Index i = 1; i + 1 < n; ++i) w(i) = s(i - 1) - s(i);
    w(n - 1) = s(n - 2);
    return w;
}

double discrete_penalty(const Vector& sorted_x, const Vector& f) {
    return brownian_weights(sorted_x, f).squaredNorm();
}

}  // namespace iprior
