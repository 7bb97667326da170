#include "iprior/kernels.hpp"

#include "iprior/linalg.hpp"

#include <cmath>
#include <sstream>

namespace iprior {

// ---------------------------------------------------------------- Metric

Metric Metric::euclidean() { return Metric{}; }

Metric Metric::sobolev(double spacing) {
    if (!(spacing > 0.0) || !std::isfinite(spacing)) {
        throw ValidationError("Sobolev metric: grid spacing must be positive");
    }
    Metric m;
    m.kind_ = Kind::sobolev;
    m.spacing_ = spacing;
    return m;
}

Metric Metric::mahalanobis(Matrix mat) {
    if (mat.rows() != mat.cols() || mat.rows() == 0) {
        throw ValidationError("Mahalanobis metric: matrix must be square and non-empty");
    }
    if (!mat.allFinite()) throw ValidationError("Mahalanobis metric: non-finite entries");
    const double scale = std::max(max_abs(mat), 1e-300);
    if (max_abs(mat - mat.transpose()) > 1e-12 * scale) {
        throw ValidationError("Mahalanobis metric: matrix is not symmetric");
    }
    Matrix sym = 0.5 * (mat + mat.transpose());
    Eigen::LLT<Matrix> llt(sym);
    Matrix lower = llt.matrixL();
    if (llt.info() != Eigen::Success || !(lower.diagonal().array() > 0.0).all()) {
        throw ValidationError("Mahalanobis metric: matrix is not positive definite");
    }
    Metric m;
    m.kind_ = Kind::mahalanobis;
    m.factor_ = std::move(lower);
    m.m_ = std::move(sym);
    return m;
}

void Metric::check_dimension(Index dim) const {
    switch (kind_) {
        case Kind::euclidean:
            return;
        case Kind::sobolev:
            if (dim < 2) throw ValidationError("Sobolev metric needs curves with at least 2 grid points");
            return;
        case Kind::mahalanobis:
            if (dim != m_.rows()) {
                std::ostringstream msg;
                msg << "Mahalanobis metric of dimension " << m_.rows() << " applied to vectors of length " << dim;
                throw ValidationError(msg.str());
            }
            return;
    }
}

Matrix Metric::features(const Matrix& rows) const {
    check_dimension(rows.cols());
    switch (kind_) {
        case Kind::euclidean:
            return rows;
        case Kind::sobolev: {
            const Index d = rows.cols() - 1;
            Matrix diffs = rows.rightCols(d) - rows.leftCols(d);
            return diffs / std::sqrt(spacing_);
        }
        case Kind::mahalanobis:
            return rows * factor_;
    }
    return rows;
}

double Metric::inner(const Vector& x, const Vector& xp) const {
    if (x.size() != xp.size()) {
        std::ostringstream msg;
        msg << "inner product of vectors with lengths " << x.size() << " and " << xp.size();
        throw ValidationError(msg.str());
    }
    check_dimension(x.size());
    switch (kind_) {
        case Kind::euclidean:
            return x.dot(xp);
        case Kind::sobolev: {
            const Index d = x.size() - 1;
            const Vector dx = x.tail(d) - x.head(d);
            const Vector dxp = xp.tail(d) - xp.head(d);
            return dx.dot(dxp) / spacing_;
        }
        case Kind::mahalanobis:
            return x.dot(m_ * xp);
    }
    return 0.0;
}

double Metric::norm(const Vector& x) const { return std::sqrt(std::max(inner(x, x), 0.0)); }

std::string Metric::name() const {
    switch (kind_) {
        case Kind::euclidean: return "euclidean";
        case Kind::sobolev: return "sobolev";
        case Kind::mahalanobis: return "mahalanobis";
    }
    return "?";
}

double inner_product(const Vector& x, const Vector& xp, const Metric& metric) {
    return metric.inner(x, xp);
}

// ---------------------------------------------------------------- Kernel

Kernel Kernel::canonical(Metric metric) {
    Kernel k;
    k.kind_ = KernelKind::canonical;
    k.metric_ = std::move(metric);
    return k;
}

Kernel Kernel::fbm(double gamma, Metric metric) {
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw ValidationError("FBM kernel: Hurst coefficient must lie in (0, 1]");
    }
    Kernel k;
    k.kind_ = KernelKind::fbm;
    k.gamma_ = gamma;
    k.metric_ = std::move(metric);
    return k;
}

Kernel Kernel::sqexp(double sigma, double xi, Metric metric) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("squared exponential kernel: sigma must be positive");
    if (!(xi > 0.0) || !std::isfinite(xi)) throw ValidationError("squared exponential kernel: xi must be positive");
    Kernel k;
    k.kind_ = KernelKind::sqexp;
    k.sigma_ = sigma;
    k.xi_ = xi;
    k.metric_ = std::move(metric);
    return k;
}

Kernel Kernel::centered(const Matrix& anchors) const {
    if (anchors.rows() == 0) throw ValidationError("centering needs at least one anchor point");
    if (!anchors.allFinite()) throw ValidationError("centering anchors contain non-finite values");
    if (!layers_.empty() && anchors.cols() != layers_.front().anchors.cols()) {
        throw ValidationError("centering anchors have a different dimension from earlier anchors");
    }
    Kernel out = *this;
    Layer layer;
    layer.anchors = anchors;
    layer.anchor_features = metric_.features(anchors);
    layer.grand_mean =
        cross_at_depth(layer.anchor_features, layer.anchor_features, layers_.size()).mean();
    out.layers_.push_back(std::move(layer));
    return out;
}

std::vector<Matrix> Kernel::anchor_sets() const {
    std::vector<Matrix> out;
    out.reserve(layers_.size());
    for (const auto& l : layers_) out.push_back(l.anchors);
    return out;
}

Kernel Kernel::uncentered() const {
    Kernel out = *this;
    out.layers_.clear();
    return out;
}

Matrix Kernel::base_cross(const Matrix& fa, const Matrix& fb) const {
    if (kind_ == KernelKind::canonical) return fa * fb.transpose();

    const Index m = fa.rows();
    const Index n = fb.rows();
    Matrix out(m, n);
    if (kind_ == KernelKind::fbm) {
        auto power = [g = gamma_](double sq) {
            if (g == 1.0) return sq;
            if (g == 0.5) return std::sqrt(sq);
            return std::pow(sq, g);
        };
        Vector pa(m), pb(n);
        for (Index i = 0; i < m; ++i) pa(i) = power(fa.row(i).squaredNorm());
        for (Index j = 0; j < n; ++j) pb(j) = power(fb.row(j).squaredNorm());
        for (Index j = 0; j < n; ++j) {
            for (Index i = 0; i < m; ++i) {
                const double d = power((fa.row(i) - fb.row(j)).squaredNorm());
                out(i, j) = -0.5 * (d - pa(i) - pb(j));
            }
        }
        return out;
    }
    const double denom = 2.0 * sigma_ * sigma_;
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < m; ++i) {
            const double sq = (fa.row(i) - fb.row(j)).squaredNorm();
            const double r = (xi_ == 1.0) ? sq : std::pow(sq, xi_);
            out(i, j) = std::exp(-r / denom);
        }
    }
    return out;
}

Matrix Kernel::cross_at_depth(const Matrix& fa, const Matrix& fb, std::size_t depth) const {
    if (depth == 0) return base_cross(fa, fb);
    const Layer& layer = layers_[depth - 1];
    Matrix k = cross_at_depth(fa, fb, depth - 1);
    const Vector ra = cross_at_depth(fa, layer.anchor_features, depth - 1).rowwise().mean();
    const Vector rb = cross_at_depth(fb, layer.anchor_features, depth - 1).rowwise().mean();
    k.colwise() -= ra;
    k.rowwise() -= rb.transpose();
    k.array() += layer.grand_mean;
    return k;
}

Matrix Kernel::cross(const Matrix& a, const Matrix& b) const {
    if (a.rows() > 0 && b.rows() > 0 && a.cols() != b.cols()) {
        std::ostringstream msg;
        msg << "kernel evaluated on points of dimension " << a.cols() << " and " << b.cols();
        throw ValidationError(msg.str());
    }
    if (!layers_.empty()) {
        const Index d = layers_.front().anchors.cols();
        if ((a.rows() > 0 && a.cols() != d) || (b.rows() > 0 && b.cols() != d)) {
            throw ValidationError("kernel evaluated on points whose dimension differs from its centering anchors");
        }
    }
    if (a.rows() == 0 || b.rows() == 0) return Matrix(a.rows(), b.rows());
    return cross_at_depth(metric_.features(a), metric_.features(b), layers_.size());
}

double Kernel::operator()(const Vector& x, const Vector& xp) const {
    if (x.size() != xp.size()) throw ValidationError("kernel evaluated on vectors of different length");
    return cross(x.transpose(), xp.transpose())(0, 0);
}

std::string Kernel::describe() const {
    std::ostringstream s;
    switch (kind_) {
        case KernelKind::canonical: s << "canonical"; break;
        case KernelKind::fbm: s << "fbm(gamma=" << gamma_ << ")"; break;
        case KernelKind::sqexp: s << "sqexp(sigma=" << sigma_ << ", xi=" << xi_ << ")"; break;
    }
    s << " [" << metric_.name() << "]";
    if (!layers_.empty()) s << " centered x" << layers_.size();
    return s.str();
}

Kernel center_kernel(const Kernel& kernel, const Matrix& anchors) { return kernel.centered(anchors); }

// ---------------------------------------------------------------- Gram

GramMatrix make_gram(Matrix values) {
    GramMatrix g;
    g.values = 0.5 * (values + values.transpose());
    auto eig = symmetric_eigen(g.values);
    g.min_raw_eigenvalue = eig.values.size() ? eig.values(0) : 0.0;
    if (g.min_raw_eigenvalue < 0.0) {
        const double top = std::max(eig.values(eig.values.size() - 1), 0.0);
        g.floor_threshold = 1e-12 * top;
        for (Index i = 0; i < eig.values.size(); ++i) {
            if (eig.values(i) < g.floor_threshold) eig.values(i) = 0.0;
        }
        Matrix recomposed = eig.vectors * eig.values.asDiagonal() * eig.vectors.transpose();
        g.values = 0.5 * (recomposed + recomposed.transpose());
        g.floored = true;
    }
    g.eigenvalues = std::move(eig.values);
    g.eigenvectors = std::move(eig.vectors);
    return g;
}

GramMatrix gram(const Kernel& kernel, const Matrix& x) {
    if (x.rows() == 0) throw ValidationError("Gram matrix of an empty point set");
    Matrix values = kernel.cross(x, x);
    for (Index j = 0; j < values.cols(); ++j) {
        for (Index i = 0; i < values.rows(); ++i) {
            if (!std::isfinite(values(i, j))) {
                std::ostringstream msg;
                msg << "non-finite kernel value at (" << i << ", " << j << ") for " << kernel.describe();
                throw NumericalError(msg.str());
            }
        }
    }
    return make_gram(std::move(values));
}

Matrix cross_gram(const Kernel& kernel, const Matrix& x_train, const Matrix& x_new) {
    if (x_new.rows() > 0 && x_new.cols() != x_train.cols()) {
        std::ostringstream msg;
        msg << "cross Gram: new points have dimension " << x_new.cols() << ", training points " << x_train.cols();
        throw ValidationError(msg.str());
    }
    return kernel.cross(x_new, x_train);
}

}  // namespace iprior
