#ifndef ROBUSTLEARN_COMMON_HPP
#define ROBUSTLEARN_COMMON_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace robustlearn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Invalid arguments or model parameters (wrong dimension, non-PSD covariance, ...).
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Numerical failure carrying the offending quantity (e.g. a singular eigenvalue).
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& msg, double value)
        : std::runtime_error(msg + " (value=" + std::to_string(value) + ")"), value_(value) {}
    double value() const { return value_; }

private:
    double value_;
};

/// An iterative routine hit its iteration cap without meeting its tolerance.
class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& msg, double residual)
        : std::runtime_error(msg + " (residual=" + std::to_string(residual) + ")"),
          residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

/// A filter step could not find a valid threshold even though its spectral test fired.
/// This indicates the good-set conditions failed (too few samples or epsilon too large);
/// it is surfaced as an error rather than silently falling back.
class ViolatedAssumptionError : public std::runtime_error {
public:
    ViolatedAssumptionError(const std::string& msg, double lambda_star, double delta)
        : std::runtime_error(msg + " (lambda*=" + std::to_string(lambda_star) +
                             ", delta=" + std::to_string(delta) + ")"),
          lambda_star_(lambda_star),
          delta_(delta) {}
    double lambda_star() const { return lambda_star_; }
    double delta() const { return delta_; }

private:
    double lambda_star_;
    double delta_;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ParameterError(msg);
}

}  // namespace robustlearn

#endif
