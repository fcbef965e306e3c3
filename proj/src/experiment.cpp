#include "fcgboost/experiment.hpp"

#include "fcgboost/digest.hpp"
#include "fcgboost/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace fcgb::experiment {

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

template <typename T>
std::string join(const std::vector<T>& values) {
    std::string out;
    for (const auto& v : values) {
        if (!out.empty()) out += ',';
        if constexpr (std::is_floating_point_v<T>) {
            out += fmt(v);
        } else {
            out += std::to_string(v);
        }
    }
    return out;
}

CsvSchema csv_schema(const ExperimentConfig& cfg) {
    CsvSchema schema;
    schema.label_column = cfg.label_column;
    const auto labels = parse_number_list(cfg.positive);
    schema.positive_labels = {labels.begin(), labels.end()};
    return schema;
}

/// Keeps margins on a fixed design in sync with a model whose coefficients
/// change between observer calls. Only changed atoms are touched.
class MarginTracker {
public:
    explicit MarginTracker(const DesignMatrix& A) : A_(A), f_(Eigen::VectorXd::Zero(A.rows())), last_(A.cols(), 0.0) {}

    const Eigen::VectorXd& update(const BoostModel& model) {
        for (std::size_t c = 0; c < model.selected.size(); ++c) {
            const auto j = model.selected[c];
            const double coef = model.coefficients[static_cast<Eigen::Index>(c)];
            double& prev = last_[static_cast<std::size_t>(j)];
            if (coef != prev) {
                f_ += (coef - prev) * A_.col(j);
                prev = coef;
            }
        }
        return f_;
    }

private:
    const DesignMatrix& A_;
    Eigen::VectorXd f_;
    std::vector<double> last_;
};

/// Runs `fit` with an observer that scores every step on train, valid and test
/// and keeps the step with the lowest validation error (ties to the earliest).
template <typename FitFn>
SchemeRun track_best_step(const std::string& name, const DesignMatrix& A_train, const Eigen::VectorXd& y_train,
                          const DesignMatrix& A_valid, const Eigen::VectorXd& y_valid,
                          const DesignMatrix& A_test, const Eigen::VectorXd& y_test, FitFn&& fit) {
    SchemeRun run;
    run.scheme = name;
    run.valid_error = std::numeric_limits<double>::infinity();
    MarginTracker train(A_train), valid(A_valid), test(A_test);
    FitResult result = fit([&](const BoostModel& model, const TraceRow& row) {
        const double ve = test_error(classify(valid.update(model)), y_valid);
        const double te = test_error(classify(test.update(model)), y_test);
        run.distinct_by_step.push_back(model.selected.size());
        run.test_error_by_step.push_back(te);
        if (ve < run.valid_error) {
            run.valid_error = ve;
            run.test_error = te;
            run.train_error = test_error(classify(train.update(model)), y_train);
            run.best_step = row.k;
            run.distinct_atoms = model.selected.size();
        }
    });
    run.trace = std::move(result.trace);
    return run;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (csv.empty()) {
        if (m < 2) throw DomainError("m must be >= 2");
        SyntheticConfig{m, parse_noise(noise), seed}.validate();
    }
    kernel(widths.empty() ? 0.1 : widths.front()).validate();
    if (family == "gauss" && widths.empty()) throw DomainError("Gaussian dictionary needs at least one width");
    for (double w : widths) {
        if (!(w > 0.0)) throw DomainError("Gaussian widths must be positive");
    }
    if (n < 0) throw DomainError("dictionary size must be >= 0");
    parse_loss(loss);
    parse_rule(rule);
    for (long k : k_grid) {
        if (k < 1) throw DomainError("k grid values must be >= 1");
    }
    AdmmConfig{gamma, alpha, admm_iter, admm_tol, false}.validate();
    if (!(nu > 0.0) || !(eps > 0.0)) throw DomainError("baseline step parameters must be positive");
    if (fcg_steps < 1 || baseline_steps < 1 || gd_iter < 1) throw DomainError("step budgets must be >= 1");
    if (solver_atoms < 1) throw DomainError("solver_atoms must be >= 1");
    if (!(solver_width > 0.0)) throw DomainError("solver_width must be positive");
    if (repetitions < 1) throw DomainError("repetitions must be >= 1");
}

std::map<std::string, std::string> ExperimentConfig::to_kv() const {
    return {
        {"m", std::to_string(m)},
        {"noise", noise},
        {"csv", csv},
        {"label_column", std::to_string(label_column)},
        {"positive", positive},
        {"family", family},
        {"n", std::to_string(n)},
        {"widths", join(widths)},
        {"degree", std::to_string(degree)},
        {"loss", loss},
        {"rule", rule},
        {"k_grid", join(k_grid)},
        {"gamma", fmt(gamma)},
        {"alpha", fmt(alpha)},
        {"admm_iter", std::to_string(admm_iter)},
        {"admm_tol", fmt(admm_tol)},
        {"nu", fmt(nu)},
        {"eps", fmt(eps)},
        {"fcg_steps", std::to_string(fcg_steps)},
        {"baseline_steps", std::to_string(baseline_steps)},
        {"solver_atoms", std::to_string(solver_atoms)},
        {"solver_width", fmt(solver_width)},
        {"gd_iter", std::to_string(gd_iter)},
        {"repetitions", std::to_string(repetitions)},
        {"seed", std::to_string(seed)},
    };
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_scalar(const std::string& key, const std::string& value) {
    T out{};
    std::istringstream is(value);
    is >> out;
    if (is.fail() || !is.eof()) throw DomainError("bad value '" + value + "' for " + key);
    return out;
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (key == "m") m = parse_scalar<Eigen::Index>(key, value);
    else if (key == "noise") noise = value;
    else if (key == "csv") csv = value;
    else if (key == "label_column") label_column = parse_scalar<int>(key, value);
    else if (key == "positive") positive = value;
    else if (key == "family") family = value;
    else if (key == "n") n = parse_scalar<Eigen::Index>(key, value);
    else if (key == "widths") widths = parse_number_list(value);
    else if (key == "degree") degree = parse_scalar<int>(key, value);
    else if (key == "loss") loss = value;
    else if (key == "rule") rule = value;
    else if (key == "k_grid") k_grid = parse_int_list(value);
    else if (key == "gamma") gamma = parse_scalar<double>(key, value);
    else if (key == "alpha") alpha = parse_scalar<double>(key, value);
    else if (key == "admm_iter") admm_iter = parse_scalar<long>(key, value);
    else if (key == "admm_tol") admm_tol = parse_scalar<double>(key, value);
    else if (key == "nu") nu = parse_scalar<double>(key, value);
    else if (key == "eps") eps = parse_scalar<double>(key, value);
    else if (key == "fcg_steps") fcg_steps = parse_scalar<long>(key, value);
    else if (key == "baseline_steps") baseline_steps = parse_scalar<long>(key, value);
    else if (key == "solver_atoms") solver_atoms = parse_scalar<Eigen::Index>(key, value);
    else if (key == "solver_width") solver_width = parse_scalar<double>(key, value);
    else if (key == "gd_iter") gd_iter = parse_scalar<long>(key, value);
    else if (key == "repetitions") repetitions = parse_scalar<int>(key, value);
    else if (key == "seed") seed = parse_scalar<std::uint64_t>(key, value);
    else throw DomainError("unknown config key '" + key + "'");
}

void load_config(const std::filesystem::path& path, ExperimentConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config '" + path.string() + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw DomainError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        }
        cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

std::string ExperimentConfig::digest() const {
    std::string text;
    for (const auto& [k, v] : to_kv()) text += k + "=" + v + "\n";
    return fnv1a_hex(text);
}

KernelKind ExperimentConfig::kernel(double width) const {
    switch (parse_family(family)) {
        case KernelKind::Family::Gauss: return KernelKind::gauss(width);
        case KernelKind::Family::Polynomial: return KernelKind::polynomial(degree);
        case KernelKind::Family::Sigmoid: return KernelKind::sigmoid();
        case KernelKind::Family::Relu: return KernelKind::relu();
    }
    return KernelKind::gauss(width);
}

std::vector<KernelKind> ExperimentConfig::kernels() const {
    if (parse_family(family) != KernelKind::Family::Gauss) return {kernel(0.1)};
    std::vector<KernelKind> out;
    for (double w : widths) out.push_back(KernelKind::gauss(w));
    return out;
}

FitConfig ExperimentConfig::fit_config() const {
    FitConfig fc;
    fc.rule = parse_rule(rule);
    fc.loss = parse_loss(loss);
    fc.solver = AdmmConfig{gamma, alpha, admm_iter, admm_tol, false};
    return fc;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto dash = item.find('-', 1);
        try {
            if (dash != std::string::npos) {
                const long lo = std::stol(item.substr(0, dash));
                const long hi = std::stol(item.substr(dash + 1));
                if (hi < lo) throw DomainError("empty range '" + item + "'");
                for (long v = lo; v <= hi; ++v) out.push_back(static_cast<double>(v));
            } else {
                std::size_t used = 0;
                out.push_back(std::stod(item, &used));
                if (used != item.size()) throw DomainError("bad number '" + item + "'");
            }
        } catch (const std::logic_error& e) {
            if (dynamic_cast<const DomainError*>(&e)) throw;
            throw DomainError("bad number list '" + text + "'");
        }
    }
    return out;
}

std::vector<long> parse_int_list(const std::string& text) {
    std::vector<long> out;
    for (double v : parse_number_list(text)) {
        if (v != std::floor(v)) throw DomainError("expected integers in '" + text + "'");
        out.push_back(static_cast<long>(v));
    }
    return out;
}

Split make_problem(const ExperimentConfig& cfg, int rep) {
    const std::uint64_t base = cfg.seed + static_cast<std::uint64_t>(rep);
    if (!cfg.is_synthetic()) {
        return split(load_csv(cfg.csv, csv_schema(cfg)), {0.5, 0.25, 0.25}, derive_seed(base, 4));
    }
    const NoiseSpec noise = parse_noise(cfg.noise);
    Split out;
    out.train = gen_synthetic({cfg.m, noise, derive_seed(base, 1)});
    out.valid = gen_synthetic({cfg.m, noise, derive_seed(base, 2)});
    out.test = gen_synthetic({cfg.m, NoNoise{}, derive_seed(base, 3)});
    return out;
}

Dataset make_eval_data(const ExperimentConfig& cfg, int rep) {
    if (!cfg.is_synthetic()) return load_csv(cfg.csv, csv_schema(cfg));
    return gen_synthetic({cfg.m, NoNoise{}, derive_seed(cfg.seed + static_cast<std::uint64_t>(rep), 3)});
}

FcgRun run_fcg(const ExperimentConfig& cfg, const Split& problem, int rep, LossKind loss) {
    const std::uint64_t base = cfg.seed + static_cast<std::uint64_t>(rep);
    const Eigen::Index n = cfg.n > 0 ? cfg.n : problem.train.size();
    const std::vector<long> grid = cfg.k_grid.empty() ? early_stop_grid(problem.train.size()) : cfg.k_grid;
    FitConfig fc = cfg.fit_config();
    fc.loss = loss;

    std::optional<FcgRun> best;
    const auto kernels = cfg.kernels();
    for (std::size_t idx = 0; idx < kernels.size(); ++idx) {
        Dictionary dict = build_dictionary(problem.train.X, kernels[idx], n, derive_seed(base, 100 + idx));
        const DesignMatrix A_train = dict.evaluate(problem.train.X);
        const DesignMatrix A_valid = dict.evaluate(problem.valid.X);
        ValidationFit vf = fit_with_validation(A_train, problem.train.y, A_valid, problem.valid.y, grid, fc);
        const auto best_idx = static_cast<std::size_t>(
            std::find(vf.grid.begin(), vf.grid.end(), vf.chosen_k) - vf.grid.begin());
        const double ve = vf.valid_errors[best_idx];
        if (best && !(ve < best->valid_error)) continue;

        FcgRun run{dict, kernels[idx], vf.model, vf.chosen_k, ve, 0.0, 0.0, vf.full.trace};
        run.model.dictionary_digest = dict.digest();
        run.train_error = test_error(classify(run.model.predict_margin(A_train)), problem.train.y);
        best = std::move(run);
    }
    best->test_error = test_error(classify(best->model.predict_margin(best->dictionary, problem.test.X)), problem.test.y);
    return std::move(*best);
}

std::vector<SchemeRun> run_schemes(const ExperimentConfig& cfg, const Split& problem, int rep) {
    // Width selection on the cheap early-stopping grid.
    ExperimentConfig select = cfg;
    select.k_grid.clear();
    const FcgRun pick = run_fcg(select, problem, rep, parse_loss(cfg.loss));
    const Dictionary& dict = pick.dictionary;

    const DesignMatrix A_train = dict.evaluate(problem.train.X);
    const DesignMatrix A_valid = dict.evaluate(problem.valid.X);
    const DesignMatrix A_test = dict.evaluate(problem.test.X);
    const auto& ytr = problem.train.y;
    const auto& yva = problem.valid.y;
    const auto& yte = problem.test.y;
    const LossKind loss = parse_loss(cfg.loss);
    const SelectionRule rule = parse_rule(cfg.rule);

    std::vector<SchemeRun> runs;
    FitConfig fc = cfg.fit_config();
    fc.k_max = cfg.fcg_steps;
    runs.push_back(track_best_step("fcg", A_train, ytr, A_valid, yva, A_test, yte, [&](const FitObserver& obs) {
        return fcg_fit(A_train, ytr, fc, obs);
    }));
    for (const auto& scheme : {BaselineScheme::orig(), BaselineScheme::shrinkage(cfg.nu), BaselineScheme::epsilon(cfg.eps)}) {
        runs.push_back(track_best_step(to_string(scheme), A_train, ytr, A_valid, yva, A_test, yte,
                                       [&](const FitObserver& obs) {
                                           return baseline_fit(A_train, ytr, scheme, cfg.baseline_steps, loss, rule, obs);
                                       }));
    }
    return runs;
}

SolverRun run_solvers(const ExperimentConfig& cfg, const Split& problem, int rep) {
    const std::uint64_t base = cfg.seed + static_cast<std::uint64_t>(rep);
    const Dictionary dict = build_dictionary(problem.train.X, KernelKind::gauss(cfg.solver_width), cfg.solver_atoms,
                                             derive_seed(base, 200));
    const DesignMatrix A = dict.evaluate(problem.train.X);
    const auto& y = problem.train.y;

    SolverRun out;
    auto t0 = Clock::now();
    out.admm = admm_solve(A, y, AdmmConfig{cfg.gamma, cfg.alpha, cfg.admm_iter, 0.0, true});
    out.admm_seconds = std::chrono::duration<double>(Clock::now() - t0).count();

    t0 = Clock::now();
    out.gd = gd_solve(A, y, GdConfig{cfg.gd_iter, std::nullopt, true, std::nullopt});
    out.gd_seconds = std::chrono::duration<double>(Clock::now() - t0).count();

    constexpr long kGdCap = 1000000;
    t0 = Clock::now();
    const SolveResult chase = gd_solve(A, y, GdConfig{kGdCap, std::nullopt, false, out.admm.objective});
    if (chase.converged) {
        out.gd_seconds_to_admm_objective = std::chrono::duration<double>(Clock::now() - t0).count();
    }
    return out;
}

std::vector<double> run_k_curve(const ExperimentConfig& cfg, const Split& problem, int rep, double width) {
    const std::uint64_t base = cfg.seed + static_cast<std::uint64_t>(rep);
    const Eigen::Index n = cfg.n > 0 ? cfg.n : problem.train.size();
    const std::vector<long> grid = cfg.k_grid.empty() ? early_stop_grid(problem.train.size()) : cfg.k_grid;
    const Dictionary dict = build_dictionary(problem.train.X, cfg.kernel(width), n, derive_seed(base, 100));
    const DesignMatrix A_train = dict.evaluate(problem.train.X);
    const DesignMatrix A_test = dict.evaluate(problem.test.X);

    FitConfig fc = cfg.fit_config();
    fc.k_max = *std::max_element(grid.begin(), grid.end());
    std::vector<double> errors(grid.size(), std::numeric_limits<double>::quiet_NaN());
    MarginTracker test(A_test);
    const FitResult fit = fcg_fit(A_train, problem.train.y, fc, [&](const BoostModel& model, const TraceRow& row) {
        for (std::size_t g = 0; g < grid.size(); ++g) {
            if (grid[g] == row.k) errors[g] = test_error(classify(test.update(model)), problem.test.y);
        }
    });
    const double final_error = test_error(classify(fit.model.predict_margin(A_test)), problem.test.y);
    for (double& e : errors) {
        if (std::isnan(e)) e = final_error;
    }
    return errors;
}

nlohmann::json SavedModel::to_json() const {
    return {{"format", "fcgboost.saved_model"},
            {"version", 1},
            {"kernel", kernel},
            {"chosen_k", chosen_k},
            {"config_digest", config_digest},
            {"config", config},
            {"dictionary", dictionary.to_json()},
            {"model", model.to_json()}};
}

SavedModel SavedModel::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "fcgboost.saved_model") throw DataError("not a saved model");
    if (j.value("version", 0) != 1) throw DataError("unsupported saved model version");
    return SavedModel{Dictionary::from_json(j.at("dictionary")),
                      BoostModel::from_json(j.at("model")),
                      j.at("kernel").get<std::string>(),
                      j.at("chosen_k").get<long>(),
                      j.at("config_digest").get<std::string>(),
                      j.at("config").get<std::map<std::string, std::string>>()};
}

void SavedModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << to_json().dump(1) << '\n';
}

SavedModel SavedModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed model file '" + path.string() + "': " + e.what());
    }
}

void append_jsonl(const std::filesystem::path& path, const nlohmann::json& row) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw DataError("cannot append to '" + path.string() + "'");
    out << row.dump() << '\n';
    out.flush();
}

void write_trace_csv(const std::filesystem::path& path, const TrainTrace& trace) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out.precision(12);
    out << "k,atom,risk,max_corr,solver_iters,seconds\n";
    for (const auto& r : trace) {
        out << r.k << ',' << r.atom << ',' << r.risk << ',' << r.max_corr << ',' << r.solver_iters << ','
            << r.seconds << '\n';
    }
}

void write_solver_trace_csv(const std::filesystem::path& path, const std::vector<SolverTraceRow>& trace) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out.precision(12);
    out << "iter,objective,primal_residual,seconds\n";
    for (const auto& r : trace) {
        out << r.iter << ',' << r.objective << ',' << r.primal_residual << ',' << r.seconds << '\n';
    }
}

}  // namespace fcgb::experiment
