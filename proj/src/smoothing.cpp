#include "mfexp/smoothing.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mfexp/errors.hpp"

namespace mfexp {

namespace {

constexpr double kMergeTolerance = 1e-3;  // relative to the data range

struct Grouped {
    std::vector<double> x;
    std::vector<double> y;  // mean response at each distinct x
    std::vector<double> w;  // multiplicity
    double within_ss = 0.0;  // sum of squared deviations from the group means
};

// Abscissae closer than `tol` to the first point of the current group are
// merged (weighted mean of x and y). Very close knots make the penalty matrix
// so ill-conditioned that its small eigenvalues, which govern the smoothest
// fits, drown in rounding error.
Grouped group_by_abscissa(const std::vector<double>& x, const std::vector<double>& y, double tol) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    Grouped g;
    double anchor = 0.0;
    for (std::size_t k : order) {
        if (!g.x.empty() && x[k] - anchor <= tol) {
            const double wn = g.w.back() + 1.0;
            const double dy = y[k] - g.y.back();
            g.x.back() += (x[k] - g.x.back()) / wn;
            g.y.back() += dy / wn;
            g.within_ss += dy * (y[k] - g.y.back());  // Welford update
            g.w.back() = wn;
        } else {
            anchor = x[k];
            g.x.push_back(x[k]);
            g.y.push_back(y[k]);
            g.w.push_back(1.0);
        }
    }
    return g;
}

}  // namespace

SmoothingSpline::SmoothingSpline(std::vector<double> x, std::vector<double> y) {
    if (x.size() != y.size()) throw DomainError("smoothing spline: x and y sizes differ");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            throw DomainError("smoothing spline: non-finite data");
        }
    }
    const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
    const double span = x.empty() ? 0.0 : *xmax - *xmin;
    Grouped g = group_by_abscissa(x, y, kMergeTolerance * span);
    const auto n = static_cast<Eigen::Index>(g.x.size());
    if (n < 4) throw DomainError("smoothing spline: need at least four distinct abscissae");

    // Green & Silverman: g minimises sum w (y - g)^2 + lambda * int g''^2, with
    // Q (n x n-2) and R (n-2 x n-2) from the knot spacings.
    Eigen::VectorXd h(n - 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i) h(i) = g.x[i + 1] - g.x[i];
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n - 2);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n - 2, n - 2);
    for (Eigen::Index j = 1; j + 1 < n; ++j) {
        const Eigen::Index c = j - 1;
        Q(j - 1, c) = 1.0 / h(j - 1);
        Q(j, c) = -1.0 / h(j - 1) - 1.0 / h(j);
        Q(j + 1, c) = 1.0 / h(j);
        R(c, c) = (h(j - 1) + h(j)) / 3.0;
        if (c + 1 < n - 2) {
            R(c, c + 1) = h(j) / 6.0;
            R(c + 1, c) = h(j) / 6.0;
        }
    }

    // Symmetrised problem: with W^{1/2} z = f, the smoother matrix is
    // (I + lambda K)^{-1}, K = W^{-1/2} Q R^{-1} Q^T W^{-1/2}.
    Eigen::VectorXd sw(n), yv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        sw(i) = std::sqrt(g.w[i]);
        yv(i) = g.y[i];
    }
    const Eigen::MatrixXd RinvQt = R.ldlt().solve(Q.transpose());
    Eigen::MatrixXd K = Q * RinvQt;
    K = sw.cwiseInverse().asDiagonal() * K * sw.cwiseInverse().asDiagonal();
    K = 0.5 * (K + K.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    if (eig.info() != Eigen::Success) throw NumericalError("smoothing spline: eigensolver failed");
    const Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
    const Eigen::VectorXd proj = eig.eigenvectors().transpose() * (sw.asDiagonal() * yv);

    const double total_w = std::accumulate(g.w.begin(), g.w.end(), 0.0);
    double best_score = std::numeric_limits<double>::infinity();
    double best_lambda = 0.0;
    // The grid spans from interpolation (lambda * largest eigenvalue small) to
    // an essentially linear fit (lambda * smallest non-null eigenvalue large).
    // Eigenvalues come sorted ascending; the first two belong to the linear null space.
    const double lam_max = std::max(lam(n - 1), 1e-300);
    const double lam_min = std::max(lam(2), lam_max * 1e-14);
    const double log_lo = std::log10(1e-2 / lam_max);
    const double log_hi = std::log10(1e4 / lam_min);
    const int steps = std::max(50, static_cast<int>(std::ceil((log_hi - log_lo) * 20.0)));
    for (int k = 0; k <= steps; ++k) {
        const double lambda = std::pow(10.0, log_lo + (log_hi - log_lo) * k / steps);
        double rss = g.within_ss;
        double trace = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double shrink = 1.0 / (1.0 + lambda * lam(i));
            const double resid = (1.0 - shrink) * proj(i);
            rss += resid * resid;
            trace += shrink;
        }
        // GCV on the original (ungrouped) observations.
        const double denom = 1.0 - trace / total_w;
        if (denom <= 0.0) continue;
        const double score = (rss / total_w) / (denom * denom);
        if (score < best_score) {
            best_score = score;
            best_lambda = lambda;
        }
    }
    if (!std::isfinite(best_score)) throw NumericalError("smoothing spline: GCV failed");

    Eigen::VectorXd shrink(n);
    dof_ = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        shrink(i) = 1.0 / (1.0 + best_lambda * lam(i));
        dof_ += shrink(i);
    }
    const Eigen::VectorXd fitted_scaled = eig.eigenvectors() * shrink.cwiseProduct(proj);
    const Eigen::VectorXd fitted = sw.cwiseInverse().asDiagonal() * fitted_scaled;
    const Eigen::VectorXd gamma = RinvQt * fitted;

    lambda_ = best_lambda;
    knots_ = g.x;
    values_.assign(fitted.data(), fitted.data() + n);
    second_.assign(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index j = 1; j + 1 < n; ++j) second_[j] = gamma(j - 1);
}

double SmoothingSpline::operator()(double x) const {
    const std::size_t n = knots_.size();
    if (x <= knots_.front()) {
        const double h = knots_[1] - knots_[0];
        const double slope = (values_[1] - values_[0]) / h - h * second_[1] / 6.0;
        return values_[0] + slope * (x - knots_[0]);
    }
    if (x >= knots_.back()) {
        const double h = knots_[n - 1] - knots_[n - 2];
        const double slope = (values_[n - 1] - values_[n - 2]) / h + h * second_[n - 2] / 6.0;
        return values_[n - 1] + slope * (x - knots_[n - 1]);
    }
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
    const double h = knots_[i + 1] - knots_[i];
    const double a = x - knots_[i];
    const double b = knots_[i + 1] - x;
    return (a * values_[i + 1] + b * values_[i]) / h -
           a * b / 6.0 * ((1.0 + a / h) * second_[i + 1] + (1.0 + b / h) * second_[i]);
}

KernelRegression::KernelRegression(std::vector<double> x, std::vector<double> y, double bandwidth)
    : x_(std::move(x)), y_(std::move(y)), bandwidth_(bandwidth) {
    if (x_.size() != y_.size() || x_.empty()) throw DomainError("kernel regression: bad data");
    if (!(bandwidth_ > 0.0)) throw DomainError("kernel regression: bandwidth must be > 0");
}

double KernelRegression::operator()(double x) const {
    // Log-sum-exp style normalisation keeps far-away queries finite.
    double min_u = std::numeric_limits<double>::infinity();
    for (double xi : x_) min_u = std::min(min_u, std::abs(x - xi) / bandwidth_);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
        const double u = (x - x_[i]) / bandwidth_;
        const double k = std::exp(-0.5 * (u * u - min_u * min_u));
        num += k * y_[i];
        den += k;
    }
    return num / den;
}

}  // namespace mfexp
