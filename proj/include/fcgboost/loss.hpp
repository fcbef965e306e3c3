#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <string_view>

namespace fcgb {

enum class LossKind { SquaredHinge, Square, Hinge, CubedHinge };

inline constexpr std::array<LossKind, 4> kAllLosses = {
    LossKind::SquaredHinge, LossKind::Square, LossKind::Hinge, LossKind::CubedHinge};

std::string to_string(LossKind kind);
LossKind parse_loss(std::string_view name);

/// phi(t) for margin t = y * f(x).
double loss_value(LossKind kind, double t);

/// d phi / dt. The hinge uses the subgradient 0 at t = 1.
double loss_derivative(LossKind kind, double t);

/// (1/m) sum_i phi(margins_i).
double empirical_risk(LossKind kind, const Eigen::Ref<const Eigen::VectorXd>& margins);

/// Gradient of the empirical risk w.r.t. the prediction vector f:
/// component i is phi'(y_i f_i) y_i / m, so that (grad E(f), g) = sum_i grad_i g(x_i).
Eigen::VectorXd risk_gradient(LossKind kind,
                              const Eigen::Ref<const Eigen::VectorXd>& predictions,
                              const Eigen::Ref<const Eigen::VectorXd>& labels);

/// argmin_u (max{0, 1 - a u})^2 + (gamma/2)(u - b)^2 in closed form.
double prox_squared_hinge(double a, double b, double gamma);

/// argmin_u phi(a u) + (gamma/2)(u - b)^2 for any supported loss; every
/// variant has a closed form.
double prox_loss(LossKind kind, double a, double b, double gamma);

}  // namespace fcgb
