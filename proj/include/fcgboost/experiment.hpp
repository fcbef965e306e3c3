#pragma once

#include "fcgboost/boost.hpp"
#include "fcgboost/data.hpp"
#include "fcgboost/dictionary.hpp"
#include "fcgboost/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fcgb::experiment {

/// Flat settings shared by the fit, eval and compare commands. Every field has
/// a key in to_kv(); the digest hashes that canonical key=value listing.
struct ExperimentConfig {
    // data: synthetic unless csv is set
    Eigen::Index m = 1000;
    std::string noise = "uniform:0.3";
    std::string csv;
    int label_column = -1;
    std::string positive = "1";

    // dictionary
    std::string family = "gauss";
    Eigen::Index n = 0;  // 0 means n = training size
    std::vector<double> widths = kDefaultGaussWidths;
    int degree = 2;

    // boosting
    std::string loss = "squared_hinge";
    std::string rule = "absolute";
    std::vector<long> k_grid;  // empty means early_stop_grid(training size)
    double gamma = 1.0;
    double alpha = 1.0;
    long admm_iter = 100;
    double admm_tol = 0.0;

    // baselines and scheme comparison
    double nu = 0.1;
    double eps = 0.01;
    long fcg_steps = 500;
    long baseline_steps = 5000;

    // solver comparison
    Eigen::Index solver_atoms = 15;
    double solver_width = 0.1;
    long gd_iter = 100;

    int repetitions = 20;
    std::uint64_t seed = 1;

    void validate() const;
    std::map<std::string, std::string> to_kv() const;
    /// Sets one field from its to_kv() key; unknown keys and bad values throw DomainError.
    void set(const std::string& key, const std::string& value);
    std::string digest() const;

    KernelKind kernel(double width) const;
    /// Candidate kernels: one per width for Gauss, a single one otherwise.
    std::vector<KernelKind> kernels() const;
    FitConfig fit_config() const;
    bool is_synthetic() const { return csv.empty(); }
};

/// Reads `key = value` lines into cfg. Blank lines and lines starting with # are skipped.
void load_config(const std::filesystem::path& path, ExperimentConfig& cfg);

/// splitmix64 finalizer; derives independent stream seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Parses "1,2,5" or "1-4" style numeric lists.
std::vector<double> parse_number_list(const std::string& text);
std::vector<long> parse_int_list(const std::string& text);

/// Train / validation / test triple for one repetition. Synthetic data uses
/// noisy training and validation samples of size m and a noiseless test
/// sample of size m; CSV data is split 50/25/25.
Split make_problem(const ExperimentConfig& cfg, int rep);

/// Dataset for evaluation only: the CSV file (all rows) or a noiseless synthetic sample.
Dataset make_eval_data(const ExperimentConfig& cfg, int rep);

struct FcgRun {
    Dictionary dictionary;
    KernelKind kernel;
    BoostModel model;
    long chosen_k = 0;
    double valid_error = 0.0;
    double test_error = 0.0;
    double train_error = 0.0;
    TrainTrace trace;
};

/// Builds one dictionary per candidate kernel, picks (kernel, k) on validation.
FcgRun run_fcg(const ExperimentConfig& cfg, const Split& problem, int rep, LossKind loss);

struct SchemeRun {
    std::string scheme;
    double test_error = 0.0;
    double train_error = 0.0;
    double valid_error = 0.0;
    long best_step = 0;
    std::size_t distinct_atoms = 0;
    TrainTrace trace;
    std::vector<std::size_t> distinct_by_step;
    std::vector<double> test_error_by_step;
};

/// FCG against the orig, shrinkage and epsilon baselines on one dictionary.
/// The Gaussian width is picked by FCG validation; each method then stops at
/// its own best validation step.
std::vector<SchemeRun> run_schemes(const ExperimentConfig& cfg, const Split& problem, int rep);

struct SolverRun {
    SolveResult admm;
    SolveResult gd;
    double admm_seconds = 0.0;
    double gd_seconds = 0.0;
    /// Seconds GD needs to reach the final ADMM objective; negative if it never does.
    double gd_seconds_to_admm_objective = -1.0;
};

/// ADMM against GD on a fixed Gaussian design of solver_atoms columns.
SolverRun run_solvers(const ExperimentConfig& cfg, const Split& problem, int rep);

/// Test error of the FCG model at each k in k_grid (no validation).
std::vector<double> run_k_curve(const ExperimentConfig& cfg, const Split& problem, int rep, double width);

/// Everything needed to replay a fitted model on new inputs.
struct SavedModel {
    Dictionary dictionary;
    BoostModel model;
    std::string kernel;
    long chosen_k = 0;
    std::string config_digest;
    std::map<std::string, std::string> config;

    nlohmann::json to_json() const;
    static SavedModel from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static SavedModel load(const std::filesystem::path& path);
};

/// Appends one JSON object per line.
void append_jsonl(const std::filesystem::path& path, const nlohmann::json& row);

/// Writes a training trace as CSV (k, atom, risk, max_corr, solver_iters, seconds).
void write_trace_csv(const std::filesystem::path& path, const TrainTrace& trace);
void write_solver_trace_csv(const std::filesystem::path& path, const std::vector<SolverTraceRow>& trace);

}  // namespace fcgb::experiment
