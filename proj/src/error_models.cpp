#include "iprior/error_models.hpp"

#include <cmath>
#include <sstream>

namespace iprior {

namespace {

void check_n(Index n) {
    if (n < 1) throw ValidationError("error model matrices need n >= 1");
}

// A_ij = alpha^{i-j} for i >= j
Matrix ar_factor(double alpha, Index n) {
    Matrix a = Matrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        double p = 1.0;
        for (Index i = j; i < n; ++i) {
            a(i, j) = p;
            p *= alpha;
        }
    }
    return a;
}

// unit diagonal, `super` on the first superdiagonal
Matrix upper_bidiagonal(double super, Index n) {
    Matrix b = Matrix::Identity(n, n);
    for (Index i = 0; i + 1 < n; ++i) b(i, i + 1) = super;
    return b;
}

}  // namespace

ErrorModel ErrorModel::iid(double psi) {
    if (!(psi > 0.0) || !std::isfinite(psi)) throw ValidationError("iid errors: precision psi must be positive");
    ErrorModel m;
    m.kind_ = Kind::iid;
    m.psi_ = psi;
    return m;
}

ErrorModel ErrorModel::ar1(double alpha, double sigma) {
    if (!(std::abs(alpha) <= 1.0)) throw ValidationError("AR(1) errors: alpha must lie in [-1, 1]");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("AR(1) errors: sigma must be positive");
    ErrorModel m;
    m.kind_ = Kind::ar1;
    m.alpha_ = alpha;
    m.sigma_ = sigma;
    return m;
}

ErrorModel ErrorModel::ma1(double theta, double sigma) {
    if (!std::isfinite(theta)) throw ValidationError("MA(1) errors: theta must be finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("MA(1) errors: sigma must be positive");
    ErrorModel m;
    m.kind_ = Kind::ma1;
    m.alpha_ = theta;
    m.sigma_ = sigma;
    return m;
}

double ErrorModel::precision_scale() const {
    return kind_ == Kind::iid ? psi_ : 1.0 / (sigma_ * sigma_);
}

ErrorModel ErrorModel::with_precision_scale(double scale) const {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ValidationError("precision scale must be positive");
    ErrorModel m = *this;
    if (kind_ == Kind::iid) {
        m.psi_ = scale;
    } else {
        m.sigma_ = 1.0 / std::sqrt(scale);
    }
    return m;
}

Matrix ErrorModel::precision_matrix(Index n) const {
    check_n(n);
    switch (kind_) {
        case Kind::iid:
            return psi_ * Matrix::Identity(n, n);
        case Kind::ar1: {
            const Matrix b = upper_bidiagonal(-alpha_, n);
            return (b * b.transpose()) / (sigma_ * sigma_);
        }
        case Kind::ma1: {
            // (s^2 C C^T)^{-1} = s^{-2} C^{-T} C^{-1}; C^{-1} is upper triangular
            // with entries (-theta)^{j-i}.
            const Matrix cinv = ar_factor(-alpha_, n).transpose();
            return (cinv.transpose() * cinv) / (sigma_ * sigma_);
        }
    }
    return {};
}

Matrix ErrorModel::covariance_matrix(Index n) const {
    check_n(n);
    switch (kind_) {
        case Kind::iid:
            return Matrix::Identity(n, n) / psi_;
        case Kind::ar1: {
            const Matrix a = ar_factor(alpha_, n);
            return sigma_ * sigma_ * (a * a.transpose());
        }
        case Kind::ma1: {
            const Matrix c = upper_bidiagonal(alpha_, n);
            return sigma_ * sigma_ * (c * c.transpose());
        }
    }
    return {};
}

std::string ErrorModel::name() const {
    switch (kind_) {
        case Kind::iid: return "iid";
        case Kind::ar1: return "ar1";
        case Kind::ma1: return "ma1";
    }
    return "?";
}

std::string ErrorModel::describe() const {
    std::ostringstream s;
    if (kind_ == Kind::iid) {
        s << "iid(psi=" << psi_ << ")";
    } else {
        s << name() << "(alpha=" << alpha_ << ", sigma=" << sigma_ << ")";
    }
    return s.str();
}

Matrix precision_matrix(const ErrorModel& model, Index n) { return model.precision_matrix(n); }
Matrix covariance_matrix(const ErrorModel& model, Index n) { return model.covariance_matrix(n); }

double ar1_fn_norm_squared(const Vector& w, const ErrorModel& model) {
    if (model.kind() != ErrorModel::Kind::ar1) throw ValidationError("closed-form F_n norm requires AR(1) errors");
    const double alpha = model.alpha();
    double total = 0.0;
    double tail = 0.0;  // sum_{j>=i} alpha^{j-i} w_j, built backwards
    for (Index i = w.size() - 1; i >= 0; --i) {
        tail = w(i) + alpha * tail;
        total += tail * tail;
    }
    return model.sigma() * model.sigma() * total;
}

}  // namespace iprior
