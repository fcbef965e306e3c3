#include "fcgboost/boost.hpp"

#include "fcgboost/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace fcgb {

namespace {

using Clock = std::chrono::steady_clock;

double selection_score(double corr, SelectionRule rule) {
    return rule == SelectionRule::Absolute ? std::abs(corr) : corr;
}

}  // namespace

std::string to_string(SelectionRule rule) {
    return rule == SelectionRule::Absolute ? "absolute" : "signed";
}

SelectionRule parse_rule(std::string_view name) {
    if (name == "absolute") return SelectionRule::Absolute;
    if (name == "signed") return SelectionRule::Signed;
    throw DomainError("unknown selection rule '" + std::string(name) + "'");
}

void FitConfig::validate() const {
    if (k_max < 1) throw DomainError("k_max must be >= 1");
    if (!(stall_tol >= 0.0)) throw DomainError("stall_tol must be nonnegative");
    solver.validate();
}

Eigen::VectorXd BoostModel::predict_margin(const DesignMatrix& full) const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(full.rows());
    for (std::size_t c = 0; c < selected.size(); ++c) {
        const auto j = selected[c];
        if (j < 0 || j >= full.cols()) throw DomainError("model atom index outside the design matrix");
        f += coefficients[static_cast<Eigen::Index>(c)] * full.col(j);
    }
    return f;
}

Eigen::VectorXd BoostModel::predict_margin(const Dictionary& dict, const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    if (!dictionary_digest.empty() && dictionary_digest != dict.digest()) {
        throw DomainError("model was fitted with a different dictionary");
    }
    if (selected.empty()) return Eigen::VectorXd::Zero(X.rows());
    return dict.evaluate(X, selected) * coefficients;
}

nlohmann::json BoostModel::to_json() const {
    std::vector<double> coef(coefficients.data(), coefficients.data() + coefficients.size());
    return {{"format", "fcgboost.model"},
            {"version", 1},
            {"dictionary_digest", dictionary_digest},
            {"k", k},
            {"selected", selected},
            {"coefficients", coef}};
}

BoostModel BoostModel::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "fcgboost.model") throw DataError("not a model record");
    if (j.value("version", 0) != 1) throw DataError("unsupported model version");
    BoostModel model;
    model.dictionary_digest = j.at("dictionary_digest").get<std::string>();
    model.k = j.at("k").get<long>();
    model.selected = j.at("selected").get<std::vector<Eigen::Index>>();
    const auto coef = j.at("coefficients").get<std::vector<double>>();
    if (coef.size() != model.selected.size()) throw DataError("model coefficient count mismatch");
    model.coefficients = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
    return model;
}

Eigen::Index select_atom(const Eigen::VectorXd& correlations, const std::vector<bool>& already,
                         SelectionRule rule) {
    const auto n = correlations.size();
    if (!already.empty() && static_cast<Eigen::Index>(already.size()) != n) {
        throw DomainError("select_atom: exclusion mask length mismatch");
    }
    Eigen::Index best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (!already.empty() && already[static_cast<std::size_t>(j)]) continue;
        const double score = selection_score(correlations[j], rule);
        if (best < 0 || score > best_score) {
            best = j;
            best_score = score;
        }
    }
    if (best < 0) throw ExhaustionError("every dictionary atom is already selected");
    return best;
}

Eigen::VectorXd predict_margin(const BoostModel& model, const DesignMatrix& full) {
    return model.predict_margin(full);
}

Eigen::VectorXd classify(const Eigen::Ref<const Eigen::VectorXd>& margins) {
    return margins.unaryExpr([](double t) { return t >= 0.0 ? 1.0 : -1.0; });
}

double truncate(double t) { return std::clamp(t, -1.0, 1.0); }

Eigen::VectorXd truncate(const Eigen::Ref<const Eigen::VectorXd>& margins) {
    return margins.cwiseMax(-1.0).cwiseMin(1.0);
}

std::vector<long> early_stop_grid(Eigen::Index m) {
    if (m < 2) throw DomainError("early_stop_grid needs m >= 2");
    const double md = static_cast<double>(m);
    const auto c = static_cast<long>(std::ceil(std::sqrt(md / std::log(md))));
    return {c, 2 * c, 3 * c, 4 * c, 5 * c};
}

FitResult fcg_fit(const DesignMatrix& A, const Eigen::VectorXd& y, const FitConfig& cfg,
                  const FitObserver& observer) {
    cfg.validate();
    const auto m = A.rows();
    const auto n = A.cols();
    if (m != y.size()) throw DomainError("fcg_fit: design rows and labels differ in length");
    if (n < 1 || m < 1) throw DomainError("fcg_fit: empty design matrix");

    AdmmConfig solver = cfg.solver;
    solver.record_trace = false;

    FitResult out;
    BoostModel& model = out.model;
    std::vector<bool> chosen(static_cast<std::size_t>(n), false);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd sub(m, 0);
    Eigen::MatrixXd gram(0, 0);
    const auto start = Clock::now();

    for (long k = 1; k <= cfg.k_max; ++k) {
        if (static_cast<Eigen::Index>(model.selected.size()) == n) {
            out.stalled = true;
            break;
        }
        const Eigen::VectorXd corr = atom_correlations(A, risk_gradient(cfg.loss, f, y));
        const auto j = select_atom(corr, chosen, cfg.rule);
        const double best = selection_score(corr[j], cfg.rule);
        if (best <= cfg.stall_tol) {
            out.stalled = true;
            break;
        }

        const auto s = sub.cols();
        const Eigen::VectorXd cross = sub.transpose() * A.col(j);
        sub.conservativeResize(Eigen::NoChange, s + 1);
        sub.col(s) = A.col(j);
        gram.conservativeResize(s + 1, s + 1);
        gram.block(0, s, s, 1) = cross;
        gram.block(s, 0, 1, s) = cross.transpose();
        gram(s, s) = A.col(j).squaredNorm();
        chosen[static_cast<std::size_t>(j)] = true;
        model.selected.push_back(j);

        std::optional<AdmmState> init;
        if (s > 0) {
            Eigen::VectorXd u0(s + 1);
            u0 << model.coefficients, 0.0;
            init = AdmmState{std::move(u0), f, Eigen::VectorXd::Zero(m), 0};
        }
        SolveResult solve;
        try {
            solve = admm_solve(sub, y, NormalFactor::from_gram(gram, solver.gamma, solver.alpha), solver,
                               std::move(init), cfg.loss);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string("boosting iteration ") + std::to_string(k) + ": " + e.what(),
                                 e.iteration());
        }
        model.coefficients = solve.u;
        model.k = k;
        f.noalias() = sub * model.coefficients;

        TraceRow row{k, j, empirical_risk(cfg.loss, y.cwiseProduct(f)), best, solve.iterations,
                     std::chrono::duration<double>(Clock::now() - start).count()};
        out.trace.push_back(row);
        if (observer) observer(model, row);
    }
    return out;
}

FitResult fcg_fit(const Dataset& data, const Dictionary& dict, const FitConfig& cfg, const FitObserver& observer) {
    FitResult out = fcg_fit(dict.evaluate(data.X), data.y, cfg, observer);
    out.model.dictionary_digest = dict.digest();
    return out;
}

ValidationFit fit_with_validation(const DesignMatrix& A_train, const Eigen::VectorXd& y_train,
                                  const DesignMatrix& A_valid, const Eigen::VectorXd& y_valid,
                                  const std::vector<long>& grid, FitConfig cfg) {
    if (grid.empty()) throw DomainError("fit_with_validation: empty k grid");
    if (A_valid.cols() != A_train.cols()) throw DomainError("train and validation designs differ in width");
    if (A_valid.rows() != y_valid.size()) throw DomainError("validation rows and labels differ in length");
    for (long k : grid) {
        if (k < 1) throw DomainError("fit_with_validation: grid values must be >= 1");
    }
    cfg.k_max = *std::max_element(grid.begin(), grid.end());

    ValidationFit out;
    out.grid = grid;
    out.valid_errors.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<BoostModel> snapshots(grid.size());
    BoostModel latest;

    auto score = [&](const BoostModel& model, long k) {
        for (std::size_t g = 0; g < grid.size(); ++g) {
            if (grid[g] != k) continue;
            snapshots[g] = model;
            out.valid_errors[g] = test_error(classify(model.predict_margin(A_valid)), y_valid);
        }
    };
    out.full = fcg_fit(A_train, y_train, cfg, [&](const BoostModel& model, const TraceRow& row) {
        score(model, row.k);
    });
    latest = out.full.model;

    // Grid points beyond a stall share the final model.
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (std::isnan(out.valid_errors[g])) {
            snapshots[g] = latest;
            out.valid_errors[g] = test_error(classify(latest.predict_margin(A_valid)), y_valid);
        }
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
        const bool better = out.valid_errors[g] < out.valid_errors[best];
        const bool tie_smaller = out.valid_errors[g] == out.valid_errors[best] && grid[g] < grid[best];
        if (better || tie_smaller) best = g;
    }
    out.chosen_k = grid[best];
    out.model = snapshots[best];
    return out;
}

std::string to_string(const BaselineScheme& scheme) {
    std::ostringstream os;
    switch (scheme.kind) {
        case BaselineScheme::Kind::Orig: return "orig";
        case BaselineScheme::Kind::Shrinkage: os << "shrinkage(" << scheme.param << ")"; break;
        case BaselineScheme::Kind::Epsilon: os << "epsilon(" << scheme.param << ")"; break;
    }
    return os.str();
}

double line_search(LossKind loss, const Eigen::VectorXd& f, const Eigen::Ref<const Eigen::VectorXd>& g,
                   const Eigen::VectorXd& y, double tol) {
    if (f.size() != g.size() || f.size() != y.size() || f.size() == 0) {
        throw DomainError("line_search: length mismatch");
    }
    const auto m = f.size();
    auto slope = [&](double beta) {
        double d = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            d += loss_derivative(loss, y[i] * (f[i] + beta * g[i])) * y[i] * g[i];
        }
        return d / static_cast<double>(m);
    };
    constexpr double kMaxStep = 1e15;

    const double d0 = slope(0.0);
    if (d0 == 0.0) return 0.0;
    const double dir = d0 < 0.0 ? 1.0 : -1.0;
    double lo = 0.0;
    double hi = 1.0;
    while (dir * slope(dir * hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > kMaxStep) return dir * hi;
    }
    while (hi - lo > tol * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        if (dir * slope(dir * mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return dir * 0.5 * (lo + hi);
}

FitResult baseline_fit(const DesignMatrix& A, const Eigen::VectorXd& y, const BaselineScheme& scheme,
                       long k_max, LossKind loss, SelectionRule rule, const FitObserver& observer,
                       double stall_tol) {
    if (k_max < 1) throw DomainError("k_max must be >= 1");
    if (!(scheme.param > 0.0)) throw DomainError("baseline step parameter must be positive");
    const auto m = A.rows();
    const auto n = A.cols();
    if (m != y.size()) throw DomainError("baseline_fit: design rows and labels differ in length");
    if (n < 1 || m < 1) throw DomainError("baseline_fit: empty design matrix");

    FitResult out;
    BoostModel& model = out.model;
    std::vector<Eigen::Index> slot(static_cast<std::size_t>(n), -1);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(m);
    const std::vector<bool> none;
    const auto start = Clock::now();

    for (long k = 1; k <= k_max; ++k) {
        const Eigen::VectorXd corr = atom_correlations(A, risk_gradient(loss, f, y));
        const auto j = select_atom(corr, none, rule);
        const double best = selection_score(corr[j], rule);
        if (best <= stall_tol) {
            out.stalled = true;
            break;
        }
        const double beta = line_search(loss, f, A.col(j), y);
        double step = beta;
        if (scheme.kind == BaselineScheme::Kind::Shrinkage) {
            step = scheme.param * beta;
        } else if (scheme.kind == BaselineScheme::Kind::Epsilon) {
            step = beta > 0.0 ? scheme.param : (beta < 0.0 ? -scheme.param : 0.0);
        }
        f += step * A.col(j);

        auto& pos = slot[static_cast<std::size_t>(j)];
        if (pos < 0) {
            pos = static_cast<Eigen::Index>(model.selected.size());
            model.selected.push_back(j);
            model.coefficients.conservativeResize(pos + 1);
            model.coefficients[pos] = 0.0;
        }
        model.coefficients[pos] += step;
        model.k = k;

        TraceRow row{k, j, empirical_risk(loss, y.cwiseProduct(f)), best, 0,
                     std::chrono::duration<double>(Clock::now() - start).count()};
        out.trace.push_back(row);
        if (observer) observer(model, row);
    }
    return out;
}

}  // namespace fcgb
