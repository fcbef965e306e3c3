#include "fcgboost/data.hpp"
#include "fcgboost/dictionary.hpp"
#include "fcgboost/errors.hpp"
#include "fcgboost/solver.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace fcgb;

namespace {

struct Instance {
    Eigen::MatrixXd A;
    Eigen::VectorXd y;
};

Instance random_instance(std::mt19937_64& rng, Eigen::Index m, Eigen::Index s) {
    std::normal_distribution<double> nd;
    std::bernoulli_distribution coin(0.5);
    Instance ins{Eigen::MatrixXd(m, s), Eigen::VectorXd(m)};
    for (Eigen::Index i = 0; i < ins.A.size(); ++i) ins.A.data()[i] = nd(rng);
    for (Eigen::Index i = 0; i < m; ++i) ins.y[i] = coin(rng) ? 1.0 : -1.0;
    return ins;
}

}  // namespace

TEST_CASE("normal-matrix factorization agrees with a direct inverse") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const Instance ins = random_instance(rng, 50, 8);
        const Eigen::VectorXd rhs = Eigen::VectorXd::Random(8);
        for (double gamma : {0.5, 1.0, 3.0}) {
            const NormalFactor f = cache_factorization(ins.A, gamma, 1.0);
            const Eigen::VectorXd ref = oracle::direct_normal_solve(ins.A, gamma, 1.0, rhs);
            CHECK((f.solve(rhs) - ref).cwiseAbs().maxCoeff() <= 1e-10);
            CHECK(f.solve(rhs) == f.solve(rhs));
        }
    }
    const NormalFactor id = cache_factorization(Eigen::MatrixXd::Zero(10, 3), 1.0, 2.0);
    CHECK(id.solve(Eigen::Vector3d(2, 4, -6)).isApprox(Eigen::Vector3d(1, 2, -3)));
    CHECK_THROWS_AS(id.solve(Eigen::Vector2d(1, 1)), DomainError);
}

TEST_CASE("ADMM finds the perfect separator") {
    const Dataset d = gen_synthetic({60, NoNoise{}, 2});
    const Eigen::MatrixXd A = d.y;
    const SolveResult res = admm_solve(A, d.y, AdmmConfig{});
    CHECK(res.iterations == 100);
    CHECK(res.objective <= 1e-6);
    CHECK(res.u[0] >= 1.0 - 1e-3);
    CHECK(res.trace.size() == 100);
}

TEST_CASE("ADMM rejects an empty support and bad configs") {
    const Eigen::VectorXd y = Eigen::VectorXd::Ones(5);
    CHECK_THROWS_AS(admm_solve(Eigen::MatrixXd(5, 0), y, AdmmConfig{}), DomainError);
    CHECK_THROWS_AS(admm_solve(Eigen::MatrixXd::Ones(4, 1), y, AdmmConfig{}), DomainError);
    CHECK_THROWS_AS(admm_solve(Eigen::MatrixXd::Ones(5, 1), y, AdmmConfig{0.0, 1.0, 10, 0.0}), DomainError);
    CHECK_THROWS_AS(admm_solve(Eigen::MatrixXd::Ones(5, 1), y, AdmmConfig{1.0, 0.0, 10, 0.0}), DomainError);
    CHECK_THROWS_AS(admm_solve(Eigen::MatrixXd::Ones(5, 1), y, AdmmConfig{1.0, 1.0, 0, 0.0}), DomainError);
    AdmmState bad = AdmmState::initial(2, y);
    CHECK_THROWS_AS(admm_solve(Eigen::MatrixXd::Ones(5, 1), y, AdmmConfig{}, bad), DomainError);
}

TEST_CASE("ADMM v-update is the exact per-coordinate prox") {
    std::mt19937_64 rng(4);
    const Instance ins = random_instance(rng, 30, 4);
    const double gamma = 0.7;
    const AdmmConfig cfg{gamma, 1.0, 1, 0.0, false};
    AdmmState init{Eigen::VectorXd::Random(4), Eigen::VectorXd::Random(30), Eigen::VectorXd::Zero(30), 0};
    const SolveResult res = admm_solve(ins.A, ins.y, cfg, init);
    const Eigen::VectorXd Au = ins.A * res.u;
    const double weight = 30.0 * gamma;
    for (Eigen::Index i = 0; i < 30; ++i) {
        const double c = Au[i] - init.w[i] / gamma;
        const double yi = ins.y[i];
        const double ref = oracle::golden_section(
            [&](double v) {
                const double s = std::max(0.0, 1.0 - yi * v);
                return s * s + 0.5 * weight * (v - c) * (v - c);
            },
            -100.0, 100.0);
        CHECK(std::abs(res.state.v[i] - ref) <= 1e-6);
    }
    // w^1 = w^0 + gamma (v^1 - A u^1)
    CHECK((res.state.w - gamma * (res.state.v - Au)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("ADMM converges: feasibility, optimality and stationarity") {
    std::mt19937_64 rng(10);
    std::uniform_int_distribution<Eigen::Index> rows(20, 200), cols(1, 20);
    for (int trial = 0; trial < 15; ++trial) {
        const Instance ins = random_instance(rng, rows(rng), cols(rng));
        AdmmConfig cfg = AdmmConfig::high_accuracy();
        cfg.max_iter = 10000;
        const SolveResult res = admm_solve(ins.A, ins.y, cfg);
        const Eigen::VectorXd Au = ins.A * res.u;
        CHECK((res.state.v - Au).norm() <= 1e-6);

        const Eigen::VectorXd ref = oracle::gd_reference(ins.A, ins.y, 200000, 1e-13);
        const double f_ref = oracle::squared_hinge_risk(ins.A, ins.y, ref);
        CHECK(std::abs(res.objective - f_ref) <= 1e-5 * std::max(f_ref, 1e-12));

        const Eigen::VectorXd r = risk_gradient(LossKind::SquaredHinge, Au, ins.y);
        CHECK((ins.A.transpose() * r).cwiseAbs().maxCoeff() <= 1e-4);
    }
}

TEST_CASE("ADMM tolerance stop and warm start") {
    std::mt19937_64 rng(12);
    const Instance ins = random_instance(rng, 80, 6);
    AdmmConfig cfg{1.0, 1.0, 100000, 1e-9, false};
    const SolveResult cold = admm_solve(ins.A, ins.y, cfg);
    CHECK(cold.converged);
    CHECK(cold.iterations < 100000);

    AdmmState warm{cold.u, ins.A * cold.u, Eigen::VectorXd::Zero(80), 0};
    const SolveResult again = admm_solve(ins.A, ins.y, cfg, warm);
    CHECK(again.iterations <= cold.iterations);
    CHECK(again.objective == doctest::Approx(cold.objective).epsilon(1e-8));
}

TEST_CASE("ADMM supports the other margin losses") {
    std::mt19937_64 rng(13);
    const Instance ins = random_instance(rng, 60, 5);
    for (auto loss : {LossKind::Square, LossKind::CubedHinge, LossKind::Hinge}) {
        AdmmConfig cfg{1.0, 1.0, 20000, 1e-10, false};
        const SolveResult res = admm_solve(ins.A, ins.y, cfg, std::nullopt, loss);
        // no coordinate direction improves the objective
        for (Eigen::Index j = 0; j < 5; ++j) {
            for (double step : {1e-3, -1e-3}) {
                Eigen::VectorXd u = res.u;
                u[j] += step;
                CHECK(subproblem_objective(ins.A, ins.y, u, loss) >= res.objective - 1e-7);
            }
        }
    }
    // square loss optimum is the least-squares fit to y
    AdmmConfig tight{1.0, 1.0, 50000, 1e-12, false};
    const SolveResult sq = admm_solve(ins.A, ins.y, tight, std::nullopt, LossKind::Square);
    const Eigen::VectorXd ls = ins.A.colPivHouseholderQr().solve(ins.y);
    CHECK((sq.u - ls).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("GD descends monotonically with the automatic step") {
    std::mt19937_64 rng(20);
    for (int trial = 0; trial < 5; ++trial) {
        const Instance ins = random_instance(rng, 100, 10);
        const SolveResult res = gd_solve(ins.A, ins.y, GdConfig{500});
        for (std::size_t t = 1; t < res.trace.size(); ++t) {
            CHECK(res.trace[t].objective <= res.trace[t - 1].objective + 1e-15);
        }
    }
    const Dataset d = gen_synthetic({40, NoNoise{}, 1});
    const SolveResult sep = gd_solve(d.y, d.y, GdConfig{50});
    for (std::size_t t = 1; t < sep.trace.size(); ++t) CHECK(sep.trace[t].objective <= sep.trace[t - 1].objective);
    CHECK(sep.objective <= 1e-12);
    CHECK_THROWS_AS(gd_solve(d.y, d.y, GdConfig{0}), DomainError);
    CHECK_THROWS_AS(gd_solve(d.y, d.y, GdConfig{5, -1.0}), DomainError);
}

TEST_CASE("power iteration estimates the top Gram eigenvalue") {
    std::mt19937_64 rng(2);
    const Instance ins = random_instance(rng, 40, 6);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ins.A.transpose() * ins.A);
    const double top = eig.eigenvalues().maxCoeff();
    const double est = gram_spectral_norm(ins.A, 200);
    CHECK(est == doctest::Approx(top).epsilon(1e-8));
    CHECK(gram_spectral_norm(ins.A) > 0.5 * top);
}

TEST_CASE("ADMM leads GD over the first iterations on a Gaussian design") {
    const Dataset d = gen_synthetic({1000, UniformNoise{0.3}, 1});
    const Dictionary dict = build_dictionary(d.X, KernelKind::gauss(0.1), 15, 1);
    const DesignMatrix A = dict.evaluate(d.X);
    const SolveResult admm = admm_solve(A, d.y, AdmmConfig{});
    const SolveResult gd = gd_solve(A, d.y, GdConfig{100});
    REQUIRE(admm.trace.size() == 100);
    REQUIRE(gd.trace.size() == 100);
    for (std::size_t t = 0; t < 10; ++t) CHECK(admm.trace[t].objective < gd.trace[t].objective);
}
