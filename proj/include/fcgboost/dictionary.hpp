#pragma once

#include <Eigen/Dense>

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fcgb {

/// Weak-learner family plus its shape parameter.
struct KernelKind {
    enum class Family { Gauss, Polynomial, Sigmoid, Relu };

    Family family = Family::Gauss;
    double width = 0.1;  // Gauss only
    int degree = 2;      // Polynomial only

    static KernelKind gauss(double width);
    static KernelKind polynomial(int degree);
    static KernelKind sigmoid();
    static KernelKind relu();

    void validate() const;
};

std::string to_string(KernelKind::Family family);
KernelKind::Family parse_family(std::string_view name);
std::string to_string(const KernelKind& kind);

/// m x n matrix of atom evaluations, A(i, j) = g_j(x_i).
using DesignMatrix = Eigen::MatrixXd;

inline constexpr int kDictionaryFormatVersion = 1;

/// n normalized weak learners built from training inputs. Immutable once built.
///
/// Gauss       g(x) = exp(-|x - c|^2 / (2 width^2)), c a training row
/// Polynomial  g(x) = (<x, c> + 1)^degree,           c a training row
/// Sigmoid     g(x) = tanh(<w, x> + b)
/// Relu        g(x) = max(0, <w, x> + b)
/// with w uniform on the unit sphere and b uniform on [-1, 1]. Each atom is
/// divided by max(1, max_i |g(x_i)|) over the generating inputs.
class Dictionary {
public:
    Dictionary(KernelKind kind, Eigen::MatrixXd params, Eigen::VectorXd biases,
               Eigen::VectorXd normalizers, std::uint64_t seed);

    const KernelKind& kind() const { return kind_; }
    Eigen::Index size() const { return params_.rows(); }
    Eigen::Index input_dim() const { return params_.cols(); }
    std::uint64_t seed() const { return seed_; }
    const Eigen::MatrixXd& params() const { return params_; }
    const Eigen::VectorXd& biases() const { return biases_; }
    const Eigen::VectorXd& normalizers() const { return normalizers_; }

    /// Evaluates all atoms on the rows of X.
    DesignMatrix evaluate(const Eigen::Ref<const Eigen::MatrixXd>& X) const;
    /// Evaluates a subset of atoms, in the given order.
    DesignMatrix evaluate(const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const std::vector<Eigen::Index>& atoms) const;

    nlohmann::json to_json() const;
    static Dictionary from_json(const nlohmann::json& j);
    /// Hex FNV-1a digest of the serialized record.
    std::string digest() const;

private:
    KernelKind kind_;
    Eigen::MatrixXd params_;  // centers (Gauss, Polynomial) or weights (Sigmoid, Relu), one per row
    Eigen::VectorXd biases_;
    Eigen::VectorXd normalizers_;
    std::uint64_t seed_;
};

Dictionary build_dictionary(const Eigen::Ref<const Eigen::MatrixXd>& X, const KernelKind& kind,
                            Eigen::Index n, std::uint64_t seed);

/// -(grad E(f), g_j) for every column: -A^T grad.
Eigen::VectorXd atom_correlations(const DesignMatrix& A, const Eigen::Ref<const Eigen::VectorXd>& grad);

/// Width grid used for Gaussian cross-validation.
inline const std::vector<double> kDefaultGaussWidths = {0.1, 0.5, 1.0, 5.0};

}  // namespace fcgb
