#include "fcgboost/errors.hpp"
#include "fcgboost/experiment.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fcgb;
using namespace fcgb::experiment;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kRuntime = 2;

// Raw flag values keyed by config key; applied after the config file.
struct Overrides {
    std::map<std::string, std::string> values;
    std::string config_file;
    std::string out_dir;

    ExperimentConfig resolve() const {
        ExperimentConfig cfg;
        if (!config_file.empty()) load_config(config_file, cfg);
        for (const auto& [k, v] : values) cfg.set(k, v);
        cfg.validate();
        return cfg;
    }

    fs::path output_dir() const {
        fs::path dir = ".";
        if (const char* env = std::getenv("FCGBOOST_OUT_DIR"); env && *env) dir = env;
        if (!out_dir.empty()) dir = out_dir;
        fs::create_directories(dir);
        return dir;
    }
};

void add_common(CLI::App* cmd, Overrides& ov, const std::vector<std::string>& keys) {
    cmd->add_option("--config", ov.config_file, "key = value config file; flags take precedence")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out-dir", ov.out_dir, "output directory (overrides FCGBOOST_OUT_DIR)");
    const auto defaults = ExperimentConfig{}.to_kv();
    for (const auto& key : keys) {
        std::string names = "--" + key;
        std::string dashed = key;
        std::replace(dashed.begin(), dashed.end(), '_', '-');
        if (dashed != key) names += ",--" + dashed;
        auto* opt = cmd->add_option_function<std::string>(
            names, [&ov, key](const std::string& v) { ov.values[key] = v; }, "config key " + key);
        if (auto it = defaults.find(key); it != defaults.end() && !it->second.empty()) {
            opt->default_str(it->second);
        }
    }
}

std::vector<std::string> all_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, v] : ExperimentConfig{}.to_kv()) keys.push_back(k);
    return keys;
}

json provenance(const ExperimentConfig& cfg, const std::string& command, int rep) {
    return {{"command", command},
            {"config_digest", cfg.digest()},
            {"seed", cfg.seed},
            {"rep", rep},
            {"rep_seed", cfg.seed + static_cast<std::uint64_t>(rep)}};
}

void emit(const fs::path& metrics, json row) {
    append_jsonl(metrics, row);
    std::cout << row.dump() << '\n';
}

int cmd_synth(const Overrides& ov, const std::string& out) {
    ExperimentConfig cfg = ov.resolve();
    const SyntheticConfig sc{cfg.m, parse_noise(cfg.noise), cfg.seed};
    sc.validate();
    const Dataset d = gen_synthetic(sc);
    const fs::path path = out.empty() ? ov.output_dir() / "synth.csv" : fs::path(out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    export_csv(d, path);
    json row = {{"command", "synth"}, {"path", path.string()}, {"seed", cfg.seed}, {"config_digest", cfg.digest()}};
    for (const auto& [k, v] : d.meta) row["meta"][k] = v;
    std::cout << row.dump() << '\n';
    return kOk;
}

int cmd_fit(const Overrides& ov, int rep, const std::string& model_out) {
    const ExperimentConfig cfg = ov.resolve();
    const fs::path dir = ov.output_dir();
    const Split problem = make_problem(cfg, rep);
    const FcgRun run = run_fcg(cfg, problem, rep, parse_loss(cfg.loss));

    SavedModel saved{run.dictionary, run.model, to_string(run.kernel.family), run.chosen_k, cfg.digest(), cfg.to_kv()};
    if (run.kernel.family == KernelKind::Family::Gauss) {
        std::ostringstream os;
        os << ':' << run.kernel.width;
        saved.kernel += os.str();
    }
    const fs::path model_path = model_out.empty() ? dir / "model.json" : fs::path(model_out);
    saved.save(model_path);
    write_trace_csv(dir / ("fit_trace_rep" + std::to_string(rep) + ".csv"), run.trace);

    json row = provenance(cfg, "fit", rep);
    row["kernel"] = saved.kernel;
    row["chosen_k"] = run.chosen_k;
    row["atoms"] = run.model.selected.size();
    row["train_error"] = run.train_error;
    row["valid_error"] = run.valid_error;
    row["test_error"] = run.test_error;
    row["accuracy"] = 1.0 - run.test_error;
    row["model"] = model_path.string();
    emit(dir / "metrics.jsonl", row);
    return kOk;
}

int cmd_eval(const Overrides& ov, int rep, const std::string& model_path) {
    const ExperimentConfig cfg = ov.resolve();
    const fs::path dir = ov.output_dir();
    const SavedModel saved = SavedModel::load(model_path);
    const Dataset data = make_eval_data(cfg, rep);
    const Eigen::VectorXd pred = classify(saved.model.predict_margin(saved.dictionary, data.X));

    json row = provenance(cfg, "eval", rep);
    row["model"] = model_path;
    row["model_config_digest"] = saved.config_digest;
    row["rows"] = data.size();
    row["test_error"] = test_error(pred, data.y);
    row["accuracy"] = accuracy(pred, data.y);
    emit(dir / "metrics.jsonl", row);
    return kOk;
}

std::string file_tag(std::string name) {
    for (char& c : name) {
        if (c == '(' || c == ')') c = '_';
    }
    if (!name.empty() && name.back() == '_') name.pop_back();
    return name;
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

int cmd_compare(const Overrides& ov, const std::string& axis, const std::string& sizes) {
    const ExperimentConfig cfg = ov.resolve();
    const fs::path dir = ov.output_dir();
    const fs::path metrics = dir / "metrics.jsonl";
    std::vector<std::string> cells;
    std::map<std::string, std::vector<double>> errors;
    std::map<std::string, std::vector<double>> extra;
    std::string extra_name;

    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        const Split problem = make_problem(cfg, rep);
        const std::string tag = "_rep" + std::to_string(rep) + ".csv";
        json base = provenance(cfg, "compare", rep);
        base["axis"] = axis;

        auto record = [&](const std::string& cell, json row) {
            if (std::find(cells.begin(), cells.end(), cell) == cells.end()) cells.push_back(cell);
            errors[cell].push_back(row.at("test_error").get<double>());
            row.update(base);
            row["cell"] = cell;
            emit(metrics, row);
        };

        if (axis == "losses") {
            for (LossKind loss : kAllLosses) {
                const FcgRun run = run_fcg(cfg, problem, rep, loss);
                write_trace_csv(dir / ("trace_" + to_string(loss) + tag), run.trace);
                record(to_string(loss), {{"test_error", run.test_error}, {"chosen_k", run.chosen_k},
                                         {"atoms", run.model.selected.size()}});
            }
        } else if (axis == "schemes") {
            extra_name = "distinct_atoms";
            for (const SchemeRun& run : run_schemes(cfg, problem, rep)) {
                write_trace_csv(dir / ("trace_" + file_tag(run.scheme) + tag), run.trace);
                extra[run.scheme].push_back(static_cast<double>(run.distinct_atoms));
                record(run.scheme, {{"test_error", run.test_error}, {"valid_error", run.valid_error},
                                    {"best_step", run.best_step}, {"distinct_atoms", run.distinct_atoms}});
            }
        } else if (axis == "solvers") {
            const SolverRun run = run_solvers(cfg, problem, rep);
            write_solver_trace_csv(dir / ("trace_admm" + tag), run.admm.trace);
            write_solver_trace_csv(dir / ("trace_gd" + tag), run.gd.trace);
            json row = {{"admm_objective", run.admm.objective}, {"gd_objective", run.gd.objective},
                        {"admm_seconds", run.admm_seconds}, {"gd_seconds", run.gd_seconds},
                        {"gd_seconds_to_admm_objective", run.gd_seconds_to_admm_objective}};
            row.update(base);
            emit(metrics, row);
            cells = {"admm", "gd"};
            errors["admm"].push_back(run.admm.objective);
            errors["gd"].push_back(run.gd.objective);
        } else if (axis == "k") {
            const std::vector<long> grid = cfg.k_grid.empty() ? early_stop_grid(problem.train.size()) : cfg.k_grid;
            const auto errs = run_k_curve(cfg, problem, rep, cfg.widths.empty() ? 0.1 : cfg.widths.front());
            for (std::size_t g = 0; g < grid.size(); ++g) {
                record("k=" + std::to_string(grid[g]), {{"test_error", errs[g]}, {"k", grid[g]}});
            }
        } else if (axis == "n") {
            std::vector<long> ns = sizes.empty() ? std::vector<long>{} : parse_int_list(sizes);
            if (ns.empty()) {
                const long m = static_cast<long>(problem.train.size());
                ns = {std::max(1L, m / 4), std::max(1L, m / 2), m, 2 * m};
            }
            for (long n : ns) {
                ExperimentConfig cell = cfg;
                cell.n = n;
                const FcgRun run = run_fcg(cell, problem, rep, parse_loss(cfg.loss));
                record("n=" + std::to_string(n), {{"test_error", run.test_error}, {"n", n}, {"chosen_k", run.chosen_k}});
            }
        } else {
            throw DomainError("unknown axis '" + axis + "'");
        }
    }

    const std::string value = axis == "solvers" ? "mean_objective" : "mean_test_error";
    std::cout << "# axis=" << axis << " seed=" << cfg.seed << " config_digest=" << cfg.digest()
              << " repetitions=" << cfg.repetitions << '\n';
    for (const auto& cell : cells) {
        json row = {{"command", "compare_summary"}, {"axis", axis}, {"cell", cell}, {value, mean(errors[cell])},
                    {"repetitions", cfg.repetitions}, {"seed", cfg.seed}, {"config_digest", cfg.digest()}};
        if (!extra_name.empty()) row["mean_" + extra_name] = mean(extra[cell]);
        emit(metrics, row);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fully-corrective greedy boosting with the squared hinge loss"};
    app.require_subcommand(1);

    Overrides synth_ov, fit_ov, eval_ov, compare_ov;
    std::string synth_out, model_out, model_in, axis, sizes;
    int fit_rep = 0, eval_rep = 0;

    auto* synth = app.add_subcommand("synth", "generate a synthetic data set as CSV");
    add_common(synth, synth_ov, {"m", "noise", "seed"});
    synth->add_option("--out,-o", synth_out, "CSV path (default <out-dir>/synth.csv)");

    auto* fit = app.add_subcommand("fit", "fit on train, select kernel and k on validation, report test error");
    add_common(fit, fit_ov, all_keys());
    fit->add_option("--rep", fit_rep, "repetition index")->check(CLI::NonNegativeNumber);
    fit->add_option("--model-out", model_out, "model path (default <out-dir>/model.json)");

    auto* eval = app.add_subcommand("eval", "evaluate a saved model");
    add_common(eval, eval_ov, all_keys());
    eval->add_option("--rep", eval_rep, "repetition index")->check(CLI::NonNegativeNumber);
    eval->add_option("--model", model_in, "model file")->required()->check(CLI::ExistingFile);

    auto* compare = app.add_subcommand("compare", "run repeated comparisons along one axis");
    add_common(compare, compare_ov, all_keys());
    compare->add_option("--axis", axis, "losses, solvers, schemes, k or n")
        ->required()
        ->check(CLI::IsMember({"losses", "solvers", "schemes", "k", "n"}));
    compare->add_option("--sizes", sizes, "dictionary sizes for axis n (default m/4,m/2,m,2m)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*synth) return cmd_synth(synth_ov, synth_out);
        if (*fit) return cmd_fit(fit_ov, fit_rep, model_out);
        if (*eval) return cmd_eval(eval_ov, eval_rep, model_in);
        return cmd_compare(compare_ov, axis, sizes);
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}
