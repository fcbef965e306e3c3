#include "fcgboost/loss.hpp"

#include "fcgboost/errors.hpp"

#include <cmath>

namespace fcgb {

namespace {

void require_finite(double t, const char* what) {
    if (!std::isfinite(t)) {
        throw DomainError(std::string(what) + ": non-finite margin");
    }
}

inline double positive_part(double z) { return z > 0.0 ? z : 0.0; }

}  // namespace

std::string to_string(LossKind kind) {
    switch (kind) {
        case LossKind::SquaredHinge: return "squared_hinge";
        case LossKind::Square: return "square";
        case LossKind::Hinge: return "hinge";
        case LossKind::CubedHinge: return "cubed_hinge";
    }
    return "unknown";
}

LossKind parse_loss(std::string_view name) {
    if (name == "squared_hinge" || name == "hinge2") return LossKind::SquaredHinge;
    if (name == "square" || name == "sq") return LossKind::Square;
    if (name == "hinge") return LossKind::Hinge;
    if (name == "cubed_hinge" || name == "hinge3") return LossKind::CubedHinge;
    throw DomainError("unknown loss '" + std::string(name) + "'");
}

double loss_value(LossKind kind, double t) {
    require_finite(t, "loss_value");
    const double slack = positive_part(1.0 - t);
    switch (kind) {
        case LossKind::SquaredHinge: return slack * slack;
        case LossKind::Square: return (1.0 - t) * (1.0 - t);
        case LossKind::Hinge: return slack;
        case LossKind::CubedHinge: return slack * slack * slack;
    }
    return 0.0;
}

double loss_derivative(LossKind kind, double t) {
    require_finite(t, "loss_derivative");
    const double slack = positive_part(1.0 - t);
    switch (kind) {
        case LossKind::SquaredHinge: return -2.0 * slack;
        case LossKind::Square: return -2.0 * (1.0 - t);
        case LossKind::Hinge: return t < 1.0 ? -1.0 : 0.0;
        case LossKind::CubedHinge: return -3.0 * slack * slack;
    }
    return 0.0;
}

double empirical_risk(LossKind kind, const Eigen::Ref<const Eigen::VectorXd>& margins) {
    if (margins.size() == 0) {
        throw DomainError("empirical_risk: empty margin vector");
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
        sum += loss_value(kind, margins[i]);
    }
    return sum / static_cast<double>(margins.size());
}

Eigen::VectorXd risk_gradient(LossKind kind,
                              const Eigen::Ref<const Eigen::VectorXd>& predictions,
                              const Eigen::Ref<const Eigen::VectorXd>& labels) {
    if (predictions.size() != labels.size()) {
        throw DomainError("risk_gradient: predictions and labels differ in length");
    }
    const auto m = predictions.size();
    Eigen::VectorXd grad(m);
    const double inv_m = m > 0 ? 1.0 / static_cast<double>(m) : 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        grad[i] = inv_m * loss_derivative(kind, labels[i] * predictions[i]) * labels[i];
    }
    return grad;
}

double prox_squared_hinge(double a, double b, double gamma) {
    if (!(gamma > 0.0)) {
        throw DomainError("prox_squared_hinge: gamma must be positive");
    }
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(gamma)) {
        throw DomainError("prox_squared_hinge: non-finite argument");
    }
    if (a == 0.0 || a * b >= 1.0) {
        return b;
    }
    return (2.0 * a + gamma * b) / (2.0 * a * a + gamma);
}

double prox_loss(LossKind kind, double a, double b, double gamma) {
    if (kind == LossKind::SquaredHinge) {
        return prox_squared_hinge(a, b, gamma);
    }
    if (!(gamma > 0.0)) {
        throw DomainError("prox_loss: gamma must be positive");
    }
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(gamma)) {
        throw DomainError("prox_loss: non-finite argument");
    }
    switch (kind) {
        case LossKind::Square:
            return (2.0 * a + gamma * b) / (2.0 * a * a + gamma);
        case LossKind::Hinge: {
            if (a == 0.0 || a * b >= 1.0) return b;
            // Active branch u = b + a/gamma holds while its margin stays below 1;
            // otherwise the minimizer sits on the kink a u = 1.
            if (a * b + a * a / gamma < 1.0) return b + a / gamma;
            return 1.0 / a;
        }
        case LossKind::CubedHinge: {
            if (a == 0.0 || a * b >= 1.0) return b;
            // slack z = 1 - a u > 0 solves 3 a^2 z^2 + gamma z - gamma (1 - a b) = 0.
            const double r = gamma * (1.0 - a * b);
            const double z = 2.0 * r / (gamma + std::sqrt(gamma * gamma + 12.0 * a * a * r));
            return (1.0 - z) / a;
        }
        case LossKind::SquaredHinge:
            break;
    }
    return b;
}

}  // namespace fcgb
