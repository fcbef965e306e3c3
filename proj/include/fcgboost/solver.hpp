#pragma once

#include "fcgboost/loss.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace fcgb {

/// Solvers for the fully-corrective subproblem
///
///     min_u  F(u) = (1/m) sum_i phi(y_i (A u)_i)
///
/// over a fixed column subset A (m x s).

struct AdmmConfig {
    double gamma = 1.0;  // augmented Lagrangian weight
    double alpha = 1.0;  // proximal weight on the u-step
    long max_iter = 100;
    /// Stop once |v - A u|_2 + |u^t - u^{t-1}|_2 <= tol. Zero runs to max_iter.
    double tol = 0.0;
    bool record_trace = true;

    /// Tight settings for reference solves.
    static AdmmConfig high_accuracy() { return {1.0, 1.0, 100000, 1e-10, false}; }

    void validate() const;
};

struct AdmmState {
    Eigen::VectorXd u;  // coefficients, length s
    Eigen::VectorXd v;  // split copy of A u, length m
    Eigen::VectorXd w;  // multipliers, length m
    long iter = 0;

    /// (0, y, 0).
    static AdmmState initial(Eigen::Index s, const Eigen::VectorXd& y);
};

struct SolverTraceRow {
    long iter;
    double objective;
    double primal_residual;
    double seconds;
};

struct SolveResult {
    Eigen::VectorXd u;
    AdmmState state;
    std::vector<SolverTraceRow> trace;
    long iterations = 0;
    bool converged = false;
    double objective = 0.0;
};

/// Cholesky factor of (gamma A^T A + alpha I), shared by every u-update of one solve.
class NormalFactor {
public:
    NormalFactor(const Eigen::Ref<const Eigen::MatrixXd>& A, double gamma, double alpha);
    /// Builds from a precomputed Gram matrix A^T A.
    static NormalFactor from_gram(const Eigen::Ref<const Eigen::MatrixXd>& gram, double gamma, double alpha);

    Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& rhs) const;
    Eigen::Index dim() const { return llt_.rows(); }

private:
    NormalFactor() = default;
    void factor(const Eigen::Ref<const Eigen::MatrixXd>& gram, double gamma, double alpha);

    Eigen::LLT<Eigen::MatrixXd> llt_;
};

inline NormalFactor cache_factorization(const Eigen::Ref<const Eigen::MatrixXd>& A, double gamma, double alpha) {
    return NormalFactor(A, gamma, alpha);
}

/// F(u) for the given loss.
double subproblem_objective(const Eigen::Ref<const Eigen::MatrixXd>& A, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& u, LossKind loss = LossKind::SquaredHinge);

/// ADMM with a proximal u-step:
///   u <- (gamma A^T A + alpha I)^{-1} (A^T (gamma v + w) + alpha u)
///   v_i <- prox of phi(y_i .) with weight m gamma around (A u)_i - w_i / gamma
///   w <- w + gamma (v - A u)
/// `init` defaults to (0, y, 0); a supplied w must lie in null(A^T).
SolveResult admm_solve(const Eigen::Ref<const Eigen::MatrixXd>& A, const Eigen::VectorXd& y,
                       const AdmmConfig& cfg, std::optional<AdmmState> init = std::nullopt,
                       LossKind loss = LossKind::SquaredHinge);

/// Same, reusing a factorization built for this A, gamma and alpha.
SolveResult admm_solve(const Eigen::Ref<const Eigen::MatrixXd>& A, const Eigen::VectorXd& y,
                       const NormalFactor& factor, const AdmmConfig& cfg,
                       std::optional<AdmmState> init = std::nullopt,
                       LossKind loss = LossKind::SquaredHinge);

struct GdConfig {
    long max_iter = 100;
    /// Empty selects 1/L with L = (2/m) lambda_max(A^T A).
    std::optional<double> step;
    bool record_trace = true;
    /// Stop early once the objective drops to this value.
    std::optional<double> target;

    void validate() const;
};

/// Largest eigenvalue of A^T A by power iteration.
double gram_spectral_norm(const Eigen::Ref<const Eigen::MatrixXd>& A, int iterations = 20);

/// Full-gradient descent on the squared-hinge subproblem from u = 0.
SolveResult gd_solve(const Eigen::Ref<const Eigen::MatrixXd>& A, const Eigen::VectorXd& y, const GdConfig& cfg);

}  // namespace fcgb
