#include "fcgboost/solver.hpp"

#include "fcgboost/errors.hpp"

#include <chrono>
#include <cmath>

namespace fcgb {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double margin_risk(const Eigen::VectorXd& predictions, const Eigen::VectorXd& y, LossKind loss) {
    return empirical_risk(loss, y.cwiseProduct(predictions));
}

void check_problem(const Eigen::Ref<const Eigen::MatrixXd>& A, const Eigen::VectorXd& y) {
    if (A.cols() < 1) throw DomainError("subproblem needs at least one atom (s >= 1)");
    if (A.rows() != y.size()) throw DomainError("design rows and labels differ in length");
    if (A.rows() < 1) throw DomainError("subproblem needs at least one sample");
}

}  // namespace

void AdmmConfig::validate() const {
    if (!(gamma > 0.0)) throw DomainError("ADMM gamma must be positive");
    if (!(alpha > 0.0)) throw DomainError("ADMM alpha must be positive");
    if (max_iter < 1) throw DomainError("ADMM max_iter must be >= 1");
    if (!(tol >= 0.0)) throw DomainError("ADMM tol must be nonnegative");
}

AdmmState AdmmState::initial(Eigen::Index s, const Eigen::VectorXd& y) {
    return {Eigen::VectorXd::Zero(s), y, Eigen::VectorXd::Zero(y.size()), 0};
}

NormalFactor::NormalFactor(const Eigen::Ref<const Eigen::MatrixXd>& A, double gamma, double alpha) {
    const Eigen::MatrixXd gram = A.transpose() * A;
    factor(gram, gamma, alpha);
}

NormalFactor NormalFactor::from_gram(const Eigen::Ref<const Eigen::MatrixXd>& gram, double gamma, double alpha) {
    NormalFactor f;
    f.factor(gram, gamma, alpha);
    return f;
}

void NormalFactor::factor(const Eigen::Ref<const Eigen::MatrixXd>& gram, double gamma, double alpha) {
    if (!(gamma > 0.0) || !(alpha > 0.0)) throw DomainError("factorization needs gamma, alpha > 0");
    Eigen::MatrixXd system = gamma * gram;
    system.diagonal().array() += alpha;
    llt_.compute(system);
    if (llt_.info() != Eigen::Success) throw NumericalError("normal matrix factorization failed", 0);
}

Eigen::VectorXd NormalFactor::solve(const Eigen::Ref<const Eigen::VectorXd>& rhs) const {
    if (rhs.size() != llt_.rows()) throw DomainError("factor solve: right-hand side length mismatch");
    return llt_.solve(rhs);
}

double subproblem_objective(const Eigen::Ref<const Eigen::MatrixXd>& A, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& u, LossKind loss) {
    return margin_risk(A * u, y, loss);
}

SolveResult admm_solve(const Eigen::Ref<const Eigen::MatrixXd>& A, const Eigen::VectorXd& y,
                       const AdmmConfig& cfg, std::optional<AdmmState> init, LossKind loss) {
    check_problem(A, y);
    cfg.validate();
    return admm_solve(A, y, NormalFactor(A, cfg.gamma, cfg.alpha), cfg, std::move(init), loss);
}

SolveResult admm_solve(const Eigen::Ref<const Eigen::MatrixXd>& A, const Eigen::VectorXd& y,
                       const NormalFactor& factor, const AdmmConfig& cfg,
                       std::optional<AdmmState> init, LossKind loss) {
    check_problem(A, y);
    cfg.validate();
    const auto m = A.rows();
    const auto s = A.cols();
    if (factor.dim() != s) throw DomainError("factorization does not match the design width");

    AdmmState st = init ? std::move(*init) : AdmmState::initial(s, y);
    if (st.u.size() != s || st.v.size() != m || st.w.size() != m) {
        throw DomainError("ADMM initial state has wrong dimensions");
    }
    st.iter = 0;

    const double gamma = cfg.gamma;
    const double prox_weight = static_cast<double>(m) * gamma;
    const auto start = Clock::now();

    SolveResult out;
    if (cfg.record_trace) out.trace.reserve(static_cast<std::size_t>(std::min<long>(cfg.max_iter, 100000)));

    Eigen::VectorXd Au(m);
    Eigen::VectorXd u_prev(s);
    for (long t = 1; t <= cfg.max_iter; ++t) {
        u_prev = st.u;
        st.u = factor.solve(A.transpose() * (gamma * st.v + st.w) + cfg.alpha * st.u);
        Au.noalias() = A * st.u;
        for (Eigen::Index i = 0; i < m; ++i) {
            st.v[i] = prox_loss(loss, y[i], Au[i] - st.w[i] / gamma, prox_weight);
        }
        st.w += gamma * (st.v - Au);
        st.iter = t;

        if (!st.u.allFinite() || !st.w.allFinite()) {
            throw NumericalError("ADMM produced non-finite iterates", t);
        }
        const double residual = (st.v - Au).norm();
        if (cfg.record_trace) {
            out.trace.push_back({t, margin_risk(Au, y, loss), residual, seconds_since(start)});
        }
        if (cfg.tol > 0.0 && residual + (st.u - u_prev).norm() <= cfg.tol) {
            out.converged = true;
            break;
        }
    }
    out.iterations = st.iter;
    out.u = st.u;
    out.objective = margin_risk(A * st.u, y, loss);
    out.state = std::move(st);
    return out;
}

void GdConfig::validate() const {
    if (max_iter < 1) throw DomainError("GD max_iter must be >= 1");
    if (step && !(*step > 0.0)) throw DomainError("GD step must be positive");
}

double gram_spectral_norm(const Eigen::Ref<const Eigen::MatrixXd>& A, int iterations) {
    Eigen::VectorXd x = Eigen::VectorXd::Ones(A.cols()).normalized();
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Eigen::VectorXd next = A.transpose() * (A * x);
        lambda = x.dot(next);
        const double len = next.norm();
        if (len == 0.0) return 0.0;
        x = next / len;
    }
    return lambda;
}

SolveResult gd_solve(const Eigen::Ref<const Eigen::MatrixXd>& A, const Eigen::VectorXd& y, const GdConfig& cfg) {
    check_problem(A, y);
    cfg.validate();
    const auto m = A.rows();
    double step = 0.0;
    if (cfg.step) {
        step = *cfg.step;
    } else {
        const double lipschitz = 2.0 / static_cast<double>(m) * gram_spectral_norm(A);
        step = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;
    }

    const auto start = Clock::now();
    SolveResult out;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(A.cols());
    Eigen::VectorXd Au = Eigen::VectorXd::Zero(m);
    for (long t = 1; t <= cfg.max_iter; ++t) {
        const Eigen::VectorXd grad = A.transpose() * risk_gradient(LossKind::SquaredHinge, Au, y);
        u -= step * grad;
        Au.noalias() = A * u;
        if (!u.allFinite()) throw NumericalError("GD produced non-finite iterates", t);
        out.iterations = t;
        if (cfg.record_trace || cfg.target) {
            const double obj = margin_risk(Au, y, LossKind::SquaredHinge);
            if (cfg.record_trace) out.trace.push_back({t, obj, 0.0, seconds_since(start)});
            if (cfg.target && obj <= *cfg.target) {
                out.converged = true;
                break;
            }
        }
    }
    out.u = u;
    out.objective = margin_risk(Au, y, LossKind::SquaredHinge);
    out.state = {u, Au, Eigen::VectorXd::Zero(m), out.iterations};
    return out;
}

}  // namespace fcgb
