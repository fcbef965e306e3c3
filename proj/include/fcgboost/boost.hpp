#pragma once

#include "fcgboost/data.hpp"
#include "fcgboost/dictionary.hpp"
#include "fcgboost/loss.hpp"
#include "fcgboost/solver.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace fcgb {

/// Absolute picks argmax |corr_j|; Signed picks argmax corr_j.
enum class SelectionRule { Absolute, Signed };

std::string to_string(SelectionRule rule);
SelectionRule parse_rule(std::string_view name);

struct FitConfig {
    long k_max = 1;
    SelectionRule rule = SelectionRule::Absolute;
    AdmmConfig solver{};
    double stall_tol = 1e-12;
    LossKind loss = LossKind::SquaredHinge;

    void validate() const;
};

/// f(x) = sum_j coefficients[j] * g_{selected[j]}(x).
struct BoostModel {
    std::vector<Eigen::Index> selected;
    Eigen::VectorXd coefficients;
    std::string dictionary_digest;
    long k = 0;

    /// Margins from a design matrix over the full dictionary.
    Eigen::VectorXd predict_margin(const DesignMatrix& full) const;
    /// Margins evaluated directly from the dictionary, touching selected atoms only.
    Eigen::VectorXd predict_margin(const Dictionary& dict, const Eigen::Ref<const Eigen::MatrixXd>& X) const;

    nlohmann::json to_json() const;
    static BoostModel from_json(const nlohmann::json& j);
};

struct TraceRow {
    long k = 0;
    Eigen::Index atom = -1;
    double risk = 0.0;
    double max_corr = 0.0;
    long solver_iters = 0;
    double seconds = 0.0;
};
using TrainTrace = std::vector<TraceRow>;

/// Called after every boosting iteration with the current model.
using FitObserver = std::function<void(const BoostModel&, const TraceRow&)>;

struct FitResult {
    BoostModel model;
    TrainTrace trace;
    bool stalled = false;  // stopped because the best correlation fell to stall_tol
};

/// Fully-corrective greedy boosting: select the atom best correlated with the
/// negative risk gradient, then refit all selected coefficients by ADMM.
FitResult fcg_fit(const DesignMatrix& A, const Eigen::VectorXd& y, const FitConfig& cfg,
                  const FitObserver& observer = {});
FitResult fcg_fit(const Dataset& data, const Dictionary& dict, const FitConfig& cfg,
                  const FitObserver& observer = {});

/// Index maximizing the rule over atoms not flagged in `already` (which may be
/// empty, meaning none excluded). Ties go to the smallest index.
Eigen::Index select_atom(const Eigen::VectorXd& correlations, const std::vector<bool>& already,
                         SelectionRule rule);

Eigen::VectorXd predict_margin(const BoostModel& model, const DesignMatrix& full);

/// sgn with sgn(0) = +1.
Eigen::VectorXd classify(const Eigen::Ref<const Eigen::VectorXd>& margins);

/// Clamp to [-1, 1] preserving sign.
double truncate(double t);
Eigen::VectorXd truncate(const Eigen::Ref<const Eigen::VectorXd>& margins);

/// [c, 2c, 3c, 4c, 5c] with c = ceil(sqrt(m / ln m)).
std::vector<long> early_stop_grid(Eigen::Index m);

struct ValidationFit {
    BoostModel model;
    long chosen_k = 0;
    std::vector<long> grid;
    std::vector<double> valid_errors;  // aligned with grid
    FitResult full;                    // the fit run to max(grid)
};

/// One fit to max(grid); the nested models at each grid k are scored on the
/// validation set and the lowest error wins (ties to the smallest k).
ValidationFit fit_with_validation(const DesignMatrix& A_train, const Eigen::VectorXd& y_train,
                                  const DesignMatrix& A_valid, const Eigen::VectorXd& y_valid,
                                  const std::vector<long>& grid, FitConfig cfg);

struct BaselineScheme {
    enum class Kind { Orig, Shrinkage, Epsilon };
    Kind kind = Kind::Orig;
    double param = 1.0;

    static BaselineScheme orig() { return {Kind::Orig, 1.0}; }
    static BaselineScheme shrinkage(double nu = 0.1) { return {Kind::Shrinkage, nu}; }
    static BaselineScheme epsilon(double eps = 0.01) { return {Kind::Epsilon, eps}; }
};

std::string to_string(const BaselineScheme& scheme);

/// argmin_beta E(f + beta g) by bisection on the (monotone) derivative.
double line_search(LossKind loss, const Eigen::VectorXd& f, const Eigen::Ref<const Eigen::VectorXd>& g,
                   const Eigen::VectorXd& y, double tol = 1e-10);

/// Partially-corrective gradient boosting. Atoms may repeat; model.selected
/// lists the distinct atoms in order of first use.
FitResult baseline_fit(const DesignMatrix& A, const Eigen::VectorXd& y, const BaselineScheme& scheme,
                       long k_max, LossKind loss = LossKind::SquaredHinge,
                       SelectionRule rule = SelectionRule::Absolute, const FitObserver& observer = {},
                       double stall_tol = 1e-12);

}  // namespace fcgb
