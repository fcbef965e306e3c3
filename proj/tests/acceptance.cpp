// Acceptance run: one PASS/FAIL line per criterion. Pass criterion names as
// arguments to run a subset.

#include "fcgboost/boost.hpp"
#include "fcgboost/data.hpp"
#include "fcgboost/dictionary.hpp"
#include "fcgboost/experiment.hpp"
#include "fcgboost/loss.hpp"
#include "fcgboost/solver.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace fcgb;
using namespace fcgb::experiment;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Criterion {
    std::string name;
    double budget_seconds;
    std::function<Outcome()> run;
};

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

std::string sci(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

Outcome prox_oracle() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ab(-5.0, 5.0), g(0.0, 10.0);
    double worst = 0.0;
    for (int t = 0; t < 10000; ++t) {
        const double a = ab(rng), b = ab(rng);
        double gamma = g(rng);
        while (gamma <= 0.0) gamma = g(rng);
        const double ref = oracle::golden_section(
            [&](double u) {
                const double s = std::max(0.0, 1.0 - a * u);
                return s * s + 0.5 * gamma * (u - b) * (u - b);
            },
            -100.0, 100.0);
        worst = std::max(worst, std::abs(prox_squared_hinge(a, b, gamma) - ref));
    }
    return {worst <= 1e-6, "10000 triples, max |diff| " + sci(worst) + " (tol 1e-6)"};
}

Outcome admm_correctness() {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    std::bernoulli_distribution coin(0.5);
    double worst_rel = 0.0, worst_res = 0.0;
    for (int t = 0; t < 50; ++t) {
        const Eigen::Index s = std::uniform_int_distribution<Eigen::Index>(1, 20)(rng);
        const Eigen::Index m = std::uniform_int_distribution<Eigen::Index>(std::max<Eigen::Index>(20, 5 * s), 200)(rng);
        Eigen::MatrixXd A(m, s);
        Eigen::VectorXd y(m);
        for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = nd(rng);
        for (Eigen::Index i = 0; i < m; ++i) y[i] = coin(rng) ? 1.0 : -1.0;

        const SolveResult res = admm_solve(A, y, AdmmConfig::high_accuracy());
        const double residual = (res.state.v - A * res.u).norm();
        const Eigen::VectorXd u_ref = oracle::gd_reference(A, y, 1000000, 1e-12);
        const double f_ref = oracle::squared_hinge_risk(A, y, u_ref);
        worst_rel = std::max(worst_rel, std::abs(res.objective - f_ref) / std::max(std::abs(f_ref), 1e-300));
        worst_res = std::max(worst_res, residual);
    }
    return {worst_rel <= 1e-5 && worst_res <= 1e-6,
            "50 instances, max rel objective gap " + sci(worst_rel) + " (tol 1e-5), max residual " + sci(worst_res) +
                " (tol 1e-6)"};
}

Outcome admm_vs_gd() {
    ExperimentConfig cfg;  // m = 1000, 30% uniform noise, width 0.1, 15 atoms, 100 iterations each
    const SolverRun run = run_solvers(cfg, make_problem(cfg, 0), 0);
    const bool lower = run.admm.objective <= run.gd.objective;
    const double chase = run.gd_seconds_to_admm_objective;
    const bool faster = chase < 0.0 || chase >= 2.0 * run.admm_seconds;
    std::string detail = "ADMM@100 " + fixed(run.admm.objective, 6) + " vs GD@100 " + fixed(run.gd.objective, 6) +
                         "; ADMM " + sci(run.admm_seconds) + " s, GD to equal objective " +
                         (chase < 0.0 ? std::string("never") : sci(chase) + " s") + " (need >= 2x)";
    return {lower && faster, detail};
}

Outcome greedy_rate_bound() {
    std::mt19937_64 rng(11);
    double worst_slack = std::numeric_limits<double>::infinity();
    int checked = 0;
    for (int t = 0; t < 20; ++t) {
        const Eigen::Index m = std::uniform_int_distribution<Eigen::Index>(50, 200)(rng);
        const Eigen::Index n = std::uniform_int_distribution<Eigen::Index>(5, 30)(rng);
        const double width = std::vector<double>{0.1, 0.5, 1.0}[static_cast<std::size_t>(t % 3)];
        const Dataset d = gen_synthetic({m, UniformNoise{0.2}, rng()});
        const Dictionary dict = build_dictionary(d.X, KernelKind::gauss(width), n, rng());
        const DesignMatrix A = dict.evaluate(d.X);

        const SolveResult h = admm_solve(A, d.y, AdmmConfig::high_accuracy());
        const double l1 = h.u.lpNorm<1>();
        FitConfig fc;
        fc.k_max = n;
        fc.solver = AdmmConfig::high_accuracy();
        const FitResult fit = fcg_fit(A, d.y, fc);
        for (const auto& row : fit.trace) {
            const double bound = 4.0 * l1 * l1 / static_cast<double>(row.k) + 1e-8;
            worst_slack = std::min(worst_slack, bound - (row.risk - h.objective));
            ++checked;
        }
    }
    return {worst_slack >= 0.0, std::to_string(checked) + " (instance, k) pairs, min slack " + sci(worst_slack)};
}

Outcome uniform_noise_error() {
    ExperimentConfig cfg;  // m = n = 1000, 30% uniform noise, Gauss widths, validation grid
    std::vector<double> errors;
    for (int rep = 0; rep < 20; ++rep) {
        errors.push_back(run_fcg(cfg, make_problem(cfg, rep), rep, LossKind::SquaredHinge).test_error);
    }
    const double mu = mean(errors);
    return {mu >= 0.02 && mu <= 0.07, "mean test error " + fixed(mu) + " over 20 reps (band [0.02, 0.07])"};
}

Outcome outlier_loss_ordering() {
    ExperimentConfig cfg;
    cfg.noise = "outlier:0.3,0.4";
    std::vector<double> sh, sq;
    for (int rep = 0; rep < 20; ++rep) {
        const Split p = make_problem(cfg, rep);
        sh.push_back(run_fcg(cfg, p, rep, LossKind::SquaredHinge).test_error);
        sq.push_back(run_fcg(cfg, p, rep, LossKind::Square).test_error);
    }
    return {mean(sh) <= mean(sq),
            "squared hinge " + fixed(mean(sh)) + " vs square " + fixed(mean(sq)) + " over 20 reps"};
}

Outcome scheme_sparsity() {
    ExperimentConfig cfg;  // 500 FCG steps, 5000 baseline steps
    cfg.n = 10000;
    std::vector<std::string> names;
    std::vector<std::vector<double>> atoms;
    for (int rep = 0; rep < 10; ++rep) {
        const auto runs = run_schemes(cfg, make_problem(cfg, rep), rep);
        if (names.empty()) {
            for (const auto& r : runs) names.push_back(r.scheme);
            atoms.resize(runs.size());
        }
        for (std::size_t i = 0; i < runs.size(); ++i) atoms[i].push_back(static_cast<double>(runs[i].distinct_atoms));
    }
    const double fcg = mean(atoms[0]);
    bool pass = fcg <= 30.0;
    std::string detail = "distinct atoms over 10 reps: fcg " + fixed(fcg, 1);
    for (std::size_t i = 1; i < names.size(); ++i) {
        pass = pass && fcg < mean(atoms[i]);
        detail += ", " + names[i] + " " + fixed(mean(atoms[i]), 1);
    }
    return {pass, detail + " (need fcg <= 30 and below all)"};
}

Outcome grid() {
    const auto g = early_stop_grid(1000);
    const bool ok = g == std::vector<long>{13, 26, 39, 52, 65};
    std::string s;
    for (long k : g) s += (s.empty() ? "" : ",") + std::to_string(k);
    return {ok, "early_stop_grid(1000) = [" + s + "]"};
}

Outcome invariants() {
    std::vector<std::string> failed;
    auto need = [&](bool ok, const std::string& what) {
        if (!ok) failed.push_back(what);
    };

    const Dataset big = gen_synthetic({200000, OutlierNoise{0.3, 0.4}, 5});
    const double frac = std::stod(big.meta.at("noise_fraction"));
    need(std::abs(frac - 0.174) <= 0.02, "outlier noise fraction " + fixed(frac));

    const Dataset d = gen_synthetic({150, UniformNoise{0.3}, 9});
    need(gen_synthetic({150, UniformNoise{0.3}, 9}).X == d.X, "generator determinism");
    const Dictionary dict = build_dictionary(d.X, KernelKind::gauss(0.5), 25, 3);
    need(build_dictionary(d.X, KernelKind::gauss(0.5), 25, 3).params() == dict.params(), "dictionary determinism");
    const DesignMatrix A = dict.evaluate(d.X);
    need(A.cwiseAbs().maxCoeff() <= 1.0 + 1e-12, "atom sup-norm <= 1");

    FitConfig fc;
    fc.k_max = 12;
    fc.solver = AdmmConfig::high_accuracy();
    const FitResult fit = fcg_fit(A, d.y, fc);
    for (std::size_t t = 1; t < fit.trace.size(); ++t) {
        need(fit.trace[t].risk <= fit.trace[t - 1].risk + 1e-9, "monotone risk at k=" + std::to_string(t + 1));
    }
    const Eigen::VectorXd f = fit.model.predict_margin(A);
    const Eigen::VectorXd grad = risk_gradient(LossKind::SquaredHinge, f, d.y);
    double stat = 0.0;
    for (auto j : fit.model.selected) stat = std::max(stat, std::abs(A.col(j).dot(grad)));
    need(stat <= 1e-4, "stationarity " + sci(stat));
    std::set<Eigen::Index> distinct(fit.model.selected.begin(), fit.model.selected.end());
    need(distinct.size() == fit.model.selected.size(), "distinct support");

    DesignMatrix flipped = A;
    flipped.col(fit.model.selected[0]) *= -1.0;
    const FitResult alt = fcg_fit(flipped, d.y, fc);
    need(alt.model.selected == fit.model.selected &&
             classify(alt.model.predict_margin(flipped)) == classify(f),
         "sign-flip invariance");

    const FitResult again = fcg_fit(A, d.y, fc);
    need(again.model.coefficients == fit.model.coefficients, "fit determinism");

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int t = 0; t < 1000; ++t) {
        const double x = u(rng);
        need(classify(Eigen::VectorXd::Constant(1, truncate(x)))[0] == classify(Eigen::VectorXd::Constant(1, x))[0],
             "truncation keeps the sign");
    }

    std::string detail = failed.empty() ? "noise fraction " + fixed(frac) + ", monotone risk, stationarity " + sci(stat) +
                                              ", sign flip, determinism"
                                        : failed.front();
    if (failed.size() > 1) detail += " (+" + std::to_string(failed.size() - 1) + " more)";
    return {failed.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {"prox_oracle", 5.0, prox_oracle},
        {"admm_correctness", 30.0, admm_correctness},
        {"admm_vs_gd", 30.0, admm_vs_gd},
        {"greedy_rate_bound", 120.0, greedy_rate_bound},
        {"uniform_noise_error", 600.0, uniform_noise_error},
        {"outlier_loss_ordering", 1200.0, outlier_loss_ordering},
        {"scheme_sparsity", 1200.0, scheme_sparsity},
        {"early_stop_grid", 1.0, grid},
        {"invariants", 60.0, invariants},
    };
    std::vector<std::string> only(argv + 1, argv + argc);

    int failures = 0;
    for (const auto& c : all) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
        const auto t0 = Clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        const bool in_time = secs < c.budget_seconds;
        const bool pass = out.pass && in_time;
        if (!pass) ++failures;
        std::printf("%s %s: %s [%.1f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.name.c_str(), out.detail.c_str(),
                    secs, c.budget_seconds, in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
