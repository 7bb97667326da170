#include "iprior/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace iprior {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

class CountedObjective {
public:
    CountedObjective(const Objective& f, const OptimizerOptions& o) : f_(f), o_(o) {}

    double operator()(const Vector& x) {
        ++count;
        for (Index i = 0; i < o_.lower.size(); ++i) {
            if (x(i) < o_.lower(i)) return kNegInf;
        }
        for (Index i = 0; i < o_.upper.size(); ++i) {
            if (x(i) > o_.upper(i)) return kNegInf;
        }
        const double v = f_(x);
        return std::isfinite(v) ? v : kNegInf;
    }

    int count = 0;

private:
    const Objective& f_;
    const OptimizerOptions& o_;
};

void polish(CountedObjective& f, OptimizerResult& r, const OptimizerOptions& o, int budget) {
    const Index d = r.theta.size();
    double step = o.step_tolerance;
    while (step * 2.0 < 0.05) step *= 2.0;
    r.certified = false;
    if (!std::isfinite(r.value)) return;
    while (f.count < budget) {
        Vector best_x = r.theta;
        double best_v = r.value;
        for (Index i = 0; i < d; ++i) {
            for (const double sgn : {1.0, -1.0}) {
                Vector x = r.theta;
                x(i) += sgn * step;
                const double v = f(x);
                if (v > best_v) {
                    best_v = v;
                    best_x = x;
                }
            }
        }
        if (best_v > r.value) {
            r.theta = best_x;
            r.value = best_v;
            continue;
        }
        if (step <= o.step_tolerance) {
            r.certified = true;
            return;
        }
        step = std::max(step / 2.0, o.step_tolerance);
    }
}

}  // namespace

OptimizerResult maximize_nelder_mead(const Objective& objective, const Vector& start, const OptimizerOptions& o) {
    CountedObjective f(objective, o);
    const Index d = start.size();
    const int simplex_budget = std::max(1, o.max_evaluations * 3 / 4);

    std::vector<Vector> pts(static_cast<std::size_t>(d + 1), start);
    std::vector<double> vals(static_cast<std::size_t>(d + 1));
    for (Index i = 0; i < d; ++i) pts[static_cast<std::size_t>(i + 1)](i) += o.initial_step;
    for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = f(pts[i]);

    std::vector<std::size_t> order(pts.size());
    while (f.count < simplex_budget) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[order.size() - 2];

        if (!std::isfinite(vals[best])) break;  // nowhere finite to go
        double diameter = 0.0;
        for (const auto& p : pts) diameter = std::max(diameter, (p - pts[best]).cwiseAbs().maxCoeff());
        const double spread = vals[best] - vals[worst];
        if ((std::isfinite(spread) && spread <= o.value_tolerance * (1.0 + std::abs(vals[best]))) ||
            diameter <= o.step_tolerance) {
            break;
        }

        Vector centroid = Vector::Zero(d);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i != worst) centroid += pts[i];
        }
        centroid /= static_cast<double>(d);

        const Vector reflected = centroid + (centroid - pts[worst]);
        const double vr = f(reflected);
        if (vr > vals[best]) {
            const Vector expanded = centroid + 2.0 * (centroid - pts[worst]);
            const double ve = f(expanded);
            if (ve > vr) {
                pts[worst] = expanded;
                vals[worst] = ve;
            } else {
                pts[worst] = reflected;
                vals[worst] = vr;
            }
            continue;
        }
        if (vr > vals[second_worst]) {
            pts[worst] = reflected;
            vals[worst] = vr;
            continue;
        }
        const bool outside = vr > vals[worst];
        const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                          : Vector(centroid + 0.5 * (pts[worst] - centroid));
        const double vc = f(contracted);
        if (vc > (outside ? vr : vals[worst])) {
            pts[worst] = contracted;
            vals[worst] = vc;
            continue;
        }
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i == best) continue;
            pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
            vals[i] = f(pts[i]);
        }
    }

    const auto best = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
    OptimizerResult r;
    r.theta = pts[best];
    r.value = vals[best];
    polish(f, r, o, o.max_evaluations);
    r.evaluations = f.count;
    return r;
}

OptimizerResult maximize_gradient(const Objective& objective, const Gradient& grad, const Vector& start,
                                  const OptimizerOptions& o) {
    CountedObjective f(objective, o);
    const int ascent_budget = std::max(1, o.max_evaluations * 3 / 4);
    OptimizerResult r;
    r.theta = start;
    r.value = f(start);
    double t = o.initial_step;
    while (std::isfinite(r.value) && f.count < ascent_budget) {
        const Vector g = grad(r.theta);
        if (!g.allFinite()) break;
        const Vector dir = g / std::max(1.0, g.norm());
        const double slope = g.dot(dir);
        if (slope <= 0.0) break;
        double step = t;
        bool moved = false;
        while (f.count < ascent_budget && step * dir.norm() > 1e-12) {
            const Vector x = r.theta + step * dir;
            const double v = f(x);
            if (v >= r.value + 1e-4 * step * slope) {
                const double gain = v - r.value;
                r.theta = x;
                r.value = v;
                t = std::min(2.0 * step, 10.0);
                moved = gain > o.value_tolerance * (1.0 + std::abs(v));
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    polish(f, r, o, o.max_evaluations);
    r.evaluations = f.count;
    return r;
}

ScalarMaximum maximize_golden(const std::function<double(double)>& f, double lo, double hi, double tolerance) {
    if (!(lo <= hi)) throw ValidationError("golden-section interval is empty");
    const auto safe = [&](double x) {
        const double v = f(x);
        return std::isfinite(v) ? v : kNegInf;
    };
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    ScalarMaximum best{lo, safe(lo)};
    const auto consider = [&](double x, double v) {
        if (v > best.value) best = {x, v};
    };
    consider(hi, safe(hi));
    double a = lo;
    double b = hi;
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double fc = safe(c);
    double fd = safe(d);
    while (b - a > tolerance) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = safe(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = safe(d);
        }
    }
    consider(c, fc);
    consider(d, fd);
    return best;
}

}  // namespace iprior
