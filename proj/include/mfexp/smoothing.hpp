#pragma once

#include <string>
#include <vector>

namespace mfexp {

/// Fitted one-dimensional regression curve y ~ g(x).
class Smoother {
public:
    virtual ~Smoother() = default;
    virtual double operator()(double x) const = 0;
    virtual std::string name() const = 0;
};

/// Natural cubic smoothing spline; the roughness penalty is chosen by
/// generalised cross-validation over a log-spaced grid.
class SmoothingSpline final : public Smoother {
public:
    /// Throws DomainError with fewer than four distinct abscissae.
    SmoothingSpline(std::vector<double> x, std::vector<double> y);

    double operator()(double x) const override;
    std::string name() const override { return "cubic-smoothing-spline"; }
    double lambda() const { return lambda_; }
    double effective_dof() const { return dof_; }

private:
    std::vector<double> knots_;
    std::vector<double> values_;  // fitted g at the knots
    std::vector<double> second_;  // g'' at the knots (zero at both ends)
    double lambda_ = 0.0;
    double dof_ = 0.0;
};

/// Nadaraya-Watson regression with a Gaussian kernel.
class KernelRegression final : public Smoother {
public:
    KernelRegression(std::vector<double> x, std::vector<double> y, double bandwidth = 2.0);

    double operator()(double x) const override;
    std::string name() const override { return "gaussian-kernel"; }

private:
    std::vector<double> x_;
    std::vector<double> y_;
    double bandwidth_;
};

}  // namespace mfexp
