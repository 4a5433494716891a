#include "checks.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace deepls;

namespace {

TrainSpec tiny_cylinder(std::size_t epochs, std::size_t lbfgs_iters) {
    TrainSpec s;
    s.problem = cylinder_problem();
    s.network = checks::small_config(2, 2, 8, 1, Activation::tanh, 4);
    s.sampling.n_interior = 60;
    s.sampling.n_boundary = 40;
    s.sampling_seed = 9;
    s.adam.epochs = epochs;
    s.adam.learning_rate = 1e-2;
    s.lbfgs.max_iters = lbfgs_iters;
    return s;
}

}  // namespace

TEST(Adam, ZeroGradientLeavesThetaUnchanged) {
    Vector theta{{1.0, -2.0, 3.0}};
    const Vector before = theta;
    AdamState s;
    adam_step(theta, s, Vector::Zero(3), AdamConfig{}, 1e-3);
    EXPECT_TRUE(theta.isApprox(before, 0.0));
}

TEST(Adam, FirstStepFromZeroMoments) {
    AdamConfig cfg;
    const Vector g{{0.3, -2.0, 5.0}};
    Vector theta = Vector::Zero(3);
    AdamState s;
    adam_step(theta, s, g, cfg, 1e-3);
    // hand evaluation of the recurrence at t = 1
    for (int i = 0; i < 3; ++i) {
        const double m = (1 - cfg.beta1) * g(i), v = (1 - cfg.beta2) * g(i) * g(i);
        const double mh = m / (1 - cfg.beta1), vh = v / (1 - cfg.beta2);
        EXPECT_NEAR(theta(i), -1e-3 * mh / (std::sqrt(vh) + cfg.eps_hat), 1e-12);
        EXPECT_NEAR(std::abs(theta(i)), 1e-3, 1e-7);
    }
    EXPECT_EQ(s.t, 1u);
    EXPECT_GE(s.v.minCoeff(), 0.0);
}

TEST(Adam, ClippingRescalesGradient) {
    AdamConfig cfg;
    cfg.clip_norm = 1.0;
    Vector theta = Vector::Zero(2);
    AdamState s;
    adam_step(theta, s, Vector{{6.0, 8.0}}, cfg, 1e-3);
    EXPECT_NEAR(s.m.norm() / (1 - cfg.beta1), 1.0, 1e-12);
}

TEST(Adam, RejectsNonFiniteAndMismatch) {
    Vector theta = Vector::Zero(2);
    AdamState s;
    EXPECT_THROW(adam_step(theta, s, Vector{{std::nan(""), 0.0}}, AdamConfig{}, 1e-3), NumericalError);
    EXPECT_THROW(adam_step(theta, s, Vector::Zero(3), AdamConfig{}, 1e-3), ConfigError);
}

TEST(Lbfgs, ConvexQuadratic) {
    const Vector a{{1.0, -3.0, 0.5, 7.0}};
    auto fg = [&](const Vector& x, Vector& g) {
        g = x - a;
        return 0.5 * g.squaredNorm();
    };
    for (const Vector& x0 : {Vector(Vector::Zero(4)), Vector(Vector::Constant(4, 100.0)), Vector{{-5.0, 2.0, 9.0, 1e-3}}}) {
        LbfgsConfig cfg;
        const LbfgsResult r = lbfgs_run(x0, fg, cfg);
        EXPECT_LE((r.theta - a).norm(), 1e-10);
        EXPECT_LE(r.iterations, 5u);
        EXPECT_EQ(r.status, LbfgsStatus::converged);
    }
}

TEST(Lbfgs, StartAtMinimum) {
    auto fg = [](const Vector& x, Vector& g) {
        g = x;
        return 0.5 * x.squaredNorm();
    };
    const LbfgsResult r = lbfgs_run(Vector::Zero(3), fg, LbfgsConfig{});
    EXPECT_EQ(r.iterations, 0u);
    EXPECT_EQ(r.status, LbfgsStatus::converged);
}

TEST(Lbfgs, Rosenbrock) {
    auto fg = [](const Vector& x, Vector& g) {
        const double a = 1 - x(0), b = x(1) - x(0) * x(0);
        g = Vector{{-2 * a - 400 * x(0) * b, 200 * b}};
        return a * a + 100 * b * b;
    };
    LbfgsConfig cfg;
    cfg.max_iters = 200;
    const LbfgsResult r = lbfgs_run(Vector{{-1.2, 1.0}}, fg, cfg);
    EXPECT_LE((r.theta - Vector::Ones(2)).norm(), 1e-6);
    EXPECT_LE(r.iterations, 200u);
    // accepted steps never increase the objective
    for (std::size_t k = 1; k < r.values.size(); ++k) EXPECT_LE(r.values[k], r.values[k - 1]);
}

TEST(Lbfgs, CurvaturePairsPositive) {
    auto fg = [](const Vector& x, Vector& g) {
        g = Vector(x.array().cube() + x.array());
        return (0.25 * x.array().pow(4) + 0.5 * x.array().square()).sum();
    };
    const LbfgsResult r = lbfgs_run(Vector::LinSpaced(6, -2.0, 3.0), fg, LbfgsConfig{});
    EXPECT_LE(r.pairs.size(), LbfgsConfig{}.history_size);
    for (const auto& [s, y] : r.pairs) EXPECT_GT(s.dot(y), 0.0);
}

TEST(Lbfgs, LineSearchFailureReportsStatus) {
    // gradient inconsistent with the function: no Wolfe point exists
    auto fg = [](const Vector& x, Vector& g) {
        g = Vector::Ones(x.size());
        return x.squaredNorm() + 1.0;
    };
    LbfgsResult r;
    EXPECT_NO_THROW(r = lbfgs_run(Vector::Zero(2), fg, LbfgsConfig{}));
    EXPECT_EQ(r.status, LbfgsStatus::line_search_failed);
    EXPECT_TRUE(r.theta.isApprox(Vector::Zero(2), 0.0));
}

TEST(Lbfgs, CubicStepStaysInsideBracket) {
    const double t = detail::cubic_step(0.0, 1.0, -1.0, 1.0, 2.0, 3.0);
    EXPECT_GT(t, 0.1);
    EXPECT_LT(t, 0.9);
    // exact minimiser of a cubic with two bracket samples
    auto f = [](double x) { return (x - 0.4) * (x - 0.4) * (x + 1.0); };
    auto df = [](double x) { return 2 * (x - 0.4) * (x + 1.0) + (x - 0.4) * (x - 0.4); };
    EXPECT_NEAR(detail::cubic_step(0.0, f(0.0), df(0.0), 1.0, f(1.0), df(1.0)), 0.4, 1e-12);
}

TEST(Train, ZeroIterationsReturnsInitialParameters) {
    const TrainSpec s = tiny_cylinder(0, 0);
    const TrainResult r = train(s);
    EXPECT_TRUE(r.state.theta.isApprox(Network(s.network).init_parameters(s.network.seed).values, 0.0));
    EXPECT_EQ(r.state.lbfgs_status, LbfgsStatus::not_run);
}

TEST(Train, DeterministicAndTwoStageImprovement) {
    TrainSpec s = tiny_cylinder(30, 20);
    s.weights.mode = WeightMode::adaptive;
    s.weights.window = 10;
    const TrainResult a = train(s), b = train(s);
    EXPECT_TRUE(a.state.theta.isApprox(b.state.theta, 0.0));
    EXPECT_LE(a.state.loss_after_lbfgs.total, a.state.loss_after_adam.total);
    EXPECT_EQ(a.state.adam_iterations, 30u);
    // weights frozen across the quasi-Newton stage
    for (const auto& rec : a.state.history.records()) {
        if (rec.stage == Stage::lbfgs) {
            EXPECT_EQ(rec.loss.lambda, a.state.weights.lambda);
        }
    }
}

TEST(Train, MinibatchesCoverInterior) {
    TrainSpec s = tiny_cylinder(3, 0);
    s.adam.minibatch_size = 25;
    const TrainResult r = train(s);
    // 60 interior points in batches of 25 -> 3 steps per epoch
    EXPECT_EQ(r.state.adam_iterations, 9u);
    for (const auto& rec : r.state.history.records()) EXPECT_EQ(rec.loss.n_gamma_p, 40u);
}

TEST(Train, PlateauDecaysLearningRate) {
    TrainSpec s = tiny_cylinder(12, 0);
    s.adam.learning_rate = 1e-12;  // no progress: every window is a plateau
    s.adam.plateau_window = 4;
    const TrainResult r = train(s);
    EXPECT_NEAR(r.state.learning_rate, 1e-12 * 0.25, 1e-27);
}

TEST(Train, DimensionMismatchRejected) {
    TrainSpec s = tiny_cylinder(1, 0);
    s.network.dim = 3;
    EXPECT_THROW(train(s), ConfigError);
}
