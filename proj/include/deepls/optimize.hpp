#pragma once

// Two-stage training: Adam on (optionally mini-batched) interior points with
// adaptive loss weights, then L-BFGS on the frozen full objective.

#include "deepls/errors.hpp"
#include "deepls/loss.hpp"
#include "deepls/network.hpp"
#include "deepls/problem.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace deepls {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_hat = 1e-8;
    std::size_t epochs = 2000;
    std::size_t minibatch_size = 0;  // 0: full batch
    double clip_norm = 10.0;         // <= 0 disables clipping
    double lr_decay = 0.5;           // applied on a plateau
    std::size_t plateau_window = 200;
    double plateau_tolerance = 0.01;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ConfigError("adam learning_rate must be > 0");
        if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0))
            throw ConfigError("adam beta1 and beta2 must lie in (0, 1)");
        if (!(eps_hat > 0.0)) throw ConfigError("adam eps_hat must be > 0");
        if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("adam lr_decay must lie in (0, 1]");
    }
};

struct LbfgsConfig {
    std::size_t max_iters = 500;
    std::size_t history_size = 10;
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    double grad_tol = 1e-9;
    double step_tol = 1e-14;
    std::size_t max_line_search = 30;

    void validate() const {
        if (history_size < 1) throw ConfigError("lbfgs history_size must be >= 1");
        if (!(wolfe_c1 > 0.0 && wolfe_c1 < 0.5)) throw ConfigError("lbfgs wolfe_c1 must lie in (0, 0.5)");
        if (!(wolfe_c2 > wolfe_c1 && wolfe_c2 < 1.0)) throw ConfigError("lbfgs wolfe_c2 must lie in (c1, 1)");
        if (!(grad_tol > 0.0) || !(step_tol > 0.0)) throw ConfigError("lbfgs tolerances must be > 0");
    }
};

struct AdamState {
    Vector m;
    Vector v;
    std::size_t t = 0;
};

/// One bias-corrected Adam update of theta with gradient g. When clipping
/// is enabled and |g| > clip_norm, g is rescaled to norm clip_norm first.
inline void adam_step(Vector& theta, AdamState& s, Vector g, const AdamConfig& cfg, double lr) {
    if (g.size() != theta.size()) throw ConfigError("adam_step: gradient length does not match parameters");
    if (!g.allFinite()) throw NumericalError("adam_step: non-finite gradient entries");
    if (s.m.size() != theta.size()) {
        s.m = Vector::Zero(theta.size());
        s.v = Vector::Zero(theta.size());
        s.t = 0;
    }
    if (cfg.clip_norm > 0.0) {
        const double n = g.norm();
        if (n > cfg.clip_norm) g *= cfg.clip_norm / n;
    }
    ++s.t;
    s.m = cfg.beta1 * s.m + (1.0 - cfg.beta1) * g;
    s.v = cfg.beta2 * s.v + (1.0 - cfg.beta2) * g.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.t));
    theta.array() -= lr * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + cfg.eps_hat);
}

// ---------------------------------------------------------------------------
// L-BFGS

enum class LbfgsStatus { not_run, converged, step_tolerance, max_iterations, line_search_failed };

inline std::string to_string(LbfgsStatus s) {
    switch (s) {
        case LbfgsStatus::not_run: return "not_run";
        case LbfgsStatus::converged: return "converged";
        case LbfgsStatus::step_tolerance: return "step_tolerance";
        case LbfgsStatus::max_iterations: return "max_iterations";
        case LbfgsStatus::line_search_failed: return "line_search_failed";
    }
    return "?";
}

struct LbfgsResult {
    Vector theta;
    double value = 0.0;
    LbfgsStatus status = LbfgsStatus::not_run;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    std::size_t skipped_pairs = 0;
    std::vector<double> values;  // objective after each accepted step
    std::deque<std::pair<Vector, Vector>> pairs;
};

namespace detail {

// Minimiser of the cubic through (a, fa, ga), (b, fb, gb), clamped to the
// interior of [min(a,b), max(a,b)].
inline double cubic_step(double a, double fa, double ga, double b, double fb, double gb) {
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    const double lo = std::min(a, b), hi = std::max(a, b);
    double t = 0.5 * (a + b);
    if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b - a);
        const double denom = gb - ga + 2.0 * d2;
        if (denom != 0.0) t = b - (b - a) * (gb + d2 - d1) / denom;
    }
    const double margin = 0.1 * (hi - lo);
    if (!std::isfinite(t) || t < lo + margin || t > hi - margin) t = 0.5 * (a + b);
    return t;
}

struct LinePoint {
    double alpha = 0.0;
    double f = 0.0;
    double dg = 0.0;
    Vector x;
    Vector g;
};

// Strong Wolfe line search (bracketing phase followed by zoom).
template <class FG>
std::optional<LinePoint> strong_wolfe(FG& fg, const Vector& x0, double f0, double dg0, const Vector& d, double alpha1,
                                      const LbfgsConfig& cfg, std::size_t& evals) {
    auto eval = [&](double a) {
        LinePoint p;
        p.alpha = a;
        p.x = x0 + a * d;
        p.f = fg(p.x, p.g);
        ++evals;
        p.dg = p.g.allFinite() ? p.g.dot(d) : std::numeric_limits<double>::quiet_NaN();
        return p;
    };
    auto wolfe_ok = [&](const LinePoint& p) { return std::abs(p.dg) <= -cfg.wolfe_c2 * dg0; };
    auto armijo_ok = [&](const LinePoint& p) { return std::isfinite(p.f) && p.f <= f0 + cfg.wolfe_c1 * p.alpha * dg0; };

    LinePoint prev;
    prev.alpha = 0.0;
    prev.f = f0;
    prev.dg = dg0;
    double alpha = alpha1;
    auto zoom = [&](LinePoint lo, LinePoint hi, std::size_t budget) -> std::optional<LinePoint> {
        for (std::size_t k = 0; k < budget; ++k) {
            double a;
            if (std::isfinite(hi.f) && std::isfinite(hi.dg))
                a = cubic_step(lo.alpha, lo.f, lo.dg, hi.alpha, hi.f, hi.dg);
            else
                a = 0.5 * (lo.alpha + hi.alpha);
            if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
            LinePoint p = eval(a);
            if (!armijo_ok(p) || p.f >= lo.f) {
                hi = std::move(p);
            } else {
                if (wolfe_ok(p)) return p;
                if (p.dg * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = std::move(p);
            }
        }
        if (lo.alpha > 0.0) return lo;  // sufficient decrease holds; accept
        return std::nullopt;
    };

    for (std::size_t i = 0; i < cfg.max_line_search; ++i) {
        LinePoint p = eval(alpha);
        if (!armijo_ok(p) || (i > 0 && p.f >= prev.f))
            return zoom(prev, std::move(p), cfg.max_line_search);
        if (wolfe_ok(p)) return p;
        if (p.dg >= 0.0) return zoom(std::move(p), prev, cfg.max_line_search);
        prev = std::move(p);
        alpha *= 2.0;
    }
    if (prev.alpha > 0.0) return prev;
    return std::nullopt;
}

}  // namespace detail

/// Minimises F with L-BFGS (two-loop recursion, strong Wolfe line search).
/// `fg(x, g)` returns F(x) and writes the gradient into g. `on_iter(result)`
/// is called after every accepted step. A failed line search ends the run
/// with status line_search_failed and the best iterate found.
template <class FG, class OnIter = std::nullptr_t>
LbfgsResult lbfgs_run(Vector theta, FG&& fg, const LbfgsConfig& cfg, OnIter on_iter = nullptr) {
    cfg.validate();
    LbfgsResult res;
    Vector g;
    double f = fg(theta, g);
    res.evaluations = 1;
    res.theta = theta;
    res.value = f;
    if (!std::isfinite(f) || !g.allFinite()) {
        res.status = LbfgsStatus::line_search_failed;
        return res;
    }
    if (g.norm() <= cfg.grad_tol) {
        res.status = LbfgsStatus::converged;
        return res;
    }
    res.status = LbfgsStatus::max_iterations;
    std::vector<double> rho, alpha_buf;
    for (std::size_t k = 0; k < cfg.max_iters; ++k) {
        // two-loop recursion
        Vector q = g;
        const std::size_t mcount = res.pairs.size();
        alpha_buf.assign(mcount, 0.0);
        rho.assign(mcount, 0.0);
        for (std::size_t i = mcount; i-- > 0;) {
            const auto& [s, y] = res.pairs[i];
            rho[i] = 1.0 / y.dot(s);
            alpha_buf[i] = rho[i] * s.dot(q);
            q -= alpha_buf[i] * y;
        }
        if (mcount > 0) {
            const auto& [s, y] = res.pairs.back();
            q *= s.dot(y) / y.dot(y);
        }
        for (std::size_t i = 0; i < mcount; ++i) {
            const auto& [s, y] = res.pairs[i];
            const double beta = rho[i] * y.dot(q);
            q += (alpha_buf[i] - beta) * s;
        }
        Vector d = -q;
        double dg0 = d.dot(g);
        if (!(dg0 < 0.0)) {  // lost descent; restart from steepest descent
            res.pairs.clear();
            d = -g;
            dg0 = -g.squaredNorm();
        }
        const double alpha1 = (res.pairs.empty() && k == 0) ? std::min(1.0, 1.0 / g.norm()) : 1.0;
        auto step = detail::strong_wolfe(fg, theta, f, dg0, d, alpha1, cfg, res.evaluations);
        if (!step) {
            res.status = LbfgsStatus::line_search_failed;
            break;
        }
        Vector s = step->x - theta;
        Vector y = step->g - g;
        theta = std::move(step->x);
        g = std::move(step->g);
        f = step->f;
        ++res.iterations;
        res.values.push_back(f);
        res.theta = theta;
        res.value = f;
        if (s.dot(y) > 1e-12 * s.norm() * y.norm() && s.dot(y) > 0.0) {
            res.pairs.emplace_back(std::move(s), std::move(y));
            if (res.pairs.size() > cfg.history_size) res.pairs.pop_front();
        } else {
            ++res.skipped_pairs;
        }
        if constexpr (!std::is_same_v<OnIter, std::nullptr_t>) on_iter(res);
        if (g.norm() <= cfg.grad_tol) {
            res.status = LbfgsStatus::converged;
            break;
        }
        if (step->alpha * d.norm() <= cfg.step_tol) {
            res.status = LbfgsStatus::step_tolerance;
            break;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Training

struct TrainSpec {
    Problem problem;
    NetworkConfig network;
    SamplingPlan sampling;
    std::uint64_t sampling_seed = 0;
    bool resample = false;  // fresh collocation points every Adam epoch
    ResidualWeights weights;
    AdamConfig adam;
    LbfgsConfig lbfgs;
    bool verbose = false;
    std::size_t log_interval = 200;
};

struct TrainerState {
    Vector theta;
    std::size_t adam_iterations = 0;
    std::size_t adam_epochs = 0;
    std::size_t lbfgs_iterations = 0;
    AdamState adam;
    std::deque<std::pair<Vector, Vector>> lbfgs_pairs;
    LossHistory history;
    ResidualWeights weights;  // weights in force at the end (frozen for L-BFGS)
    double learning_rate = 0.0;
    std::size_t recoveries = 0;
    LbfgsStatus lbfgs_status = LbfgsStatus::not_run;
    LossBreakdown loss_after_adam;
    LossBreakdown loss_after_lbfgs;
    std::uint64_t minibatch_seed = 0;
};

struct TrainResult {
    Network network;
    TrainerState state;
    CollocationBatch batch;
};

/// Called after every Adam epoch with (epoch index, current state).
using EpochCallback = std::function<void(std::size_t, const TrainerState&)>;

inline TrainResult train(const TrainSpec& spec, const EpochCallback& on_epoch = {}) {
    spec.problem.validate();
    spec.weights.validate();
    spec.adam.validate();
    spec.lbfgs.validate();
    if (spec.network.dim != spec.problem.dim()) throw ConfigError("network dimension does not match the domain");

    TrainResult out{Network(spec.network), {}, {}};
    const Network& net = out.network;
    TrainerState& st = out.state;
    st.theta = net.init_parameters(spec.network.seed).values;
    st.weights = spec.weights;
    st.learning_rate = spec.adam.learning_rate;
    st.minibatch_seed = mix_seed(spec.sampling_seed, 0xB47C4);
    const double mu = spec.problem.material.mu;

    out.batch = sample_collocation(spec.problem.domain, spec.problem.segments, spec.sampling, spec.sampling_seed);
    PreparedBatch full = prepare_batch(out.batch, spec.problem);

    // Stage 1: Adam
    Rng shuffle(st.minibatch_seed);
    Vector last_finite = st.theta;
    std::vector<double> epoch_loss;
    std::size_t last_decay = 0;
    std::size_t last_reweight = 0;
    const bool adaptive = spec.weights.mode == WeightMode::adaptive;
    for (std::size_t epoch = 0; epoch < spec.adam.epochs; ++epoch) {
        if (spec.resample && epoch > 0) {
            out.batch = sample_collocation(spec.problem.domain, spec.problem.segments, spec.sampling,
                                           mix_seed(spec.sampling_seed, 1000 + epoch));
            full = prepare_batch(out.batch, spec.problem);
        }
        const auto ni = static_cast<std::size_t>(full.n_interior);
        const std::size_t bs = (spec.adam.minibatch_size == 0 || spec.adam.minibatch_size >= ni) ? ni : spec.adam.minibatch_size;
        std::vector<Eigen::Index> order(ni);
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        if (bs < ni) std::shuffle(order.begin(), order.end(), shuffle.engine());

        double sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < ni; start += bs) {
            const std::size_t stop = std::min(ni, start + bs);
            Vector g;
            LossBreakdown lb;
            if (bs == ni) {
                lb = objective_and_gradient(net, st.theta, full, mu, st.weights, &g);
            } else {
                const std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                     order.begin() + static_cast<std::ptrdiff_t>(stop));
                lb = objective_and_gradient(net, st.theta, full.subset(rows), mu, st.weights, &g);
            }
            if (!std::isfinite(lb.total) || !g.allFinite()) {
                if (++st.recoveries > 3)
                    throw NumericalError("training aborted: non-finite loss after 3 learning-rate reductions");
                st.theta = last_finite;
                st.learning_rate *= 0.5;
                st.adam = AdamState{};
                if (spec.verbose)
                    std::cerr << "non-finite loss at iteration " << st.adam_iterations << "; lr -> " << st.learning_rate
                              << "\n";
                continue;
            }
            last_finite = st.theta;
            st.history.push({st.adam_iterations, Stage::adam, lb});
            adam_step(st.theta, st.adam, std::move(g), spec.adam, st.learning_rate);
            ++st.adam_iterations;
            sum += lb.total;
            ++steps;
            if (adaptive && st.adam_iterations % spec.weights.window == 0) {
                const auto before = st.weights.lambda;
                st.weights = adaptive_reweight(st.history, st.weights);
                if (st.weights.lambda != before) last_reweight = epoch;
            }
        }
        epoch_loss.push_back(steps ? sum / static_cast<double>(steps) : 0.0);
        st.adam_epochs = epoch + 1;

        // a window spanning a weight change compares two different functionals
        const std::size_t w = spec.adam.plateau_window;
        if (w > 0 && epoch >= w && epoch - last_decay >= w && epoch - last_reweight >= w &&
            epoch_loss[epoch] > (1.0 - spec.adam.plateau_tolerance) * epoch_loss[epoch - w]) {
            st.learning_rate *= spec.adam.lr_decay;
            last_decay = epoch;
        }
        if (spec.verbose && (epoch % spec.log_interval == 0 || epoch + 1 == spec.adam.epochs))
            std::cerr << "adam epoch " << epoch << " loss " << epoch_loss.back() << " lr " << st.learning_rate << "\n";
        if (on_epoch) on_epoch(epoch, st);
    }

    // Stage 2: L-BFGS on the frozen full-batch objective
    const ResidualWeights frozen = st.weights;
    st.loss_after_adam = objective_and_gradient(net, st.theta, full, mu, frozen, nullptr);
    st.loss_after_lbfgs = st.loss_after_adam;
    if (spec.lbfgs.max_iters > 0) {
        LossBreakdown last;
        auto fg = [&](const Vector& x, Vector& g) {
            last = objective_and_gradient(net, x, full, mu, frozen, &g);
            return last.total;
        };
        const std::size_t base = st.adam_iterations;
        auto on_iter = [&](const LbfgsResult& r) {
            st.history.push({base + r.iterations - 1, Stage::lbfgs, last});
            if (spec.verbose && (r.iterations % spec.log_interval == 0))
                std::cerr << "lbfgs iter " << r.iterations << " loss " << r.value << "\n";
        };
        LbfgsResult r = lbfgs_run(st.theta, fg, spec.lbfgs, on_iter);
        // the last evaluation is not always the accepted iterate
        if (!r.values.empty() && r.value <= st.loss_after_adam.total) st.theta = r.theta;
        st.lbfgs_iterations = r.iterations;
        st.lbfgs_status = r.status;
        st.lbfgs_pairs = std::move(r.pairs);
        st.loss_after_lbfgs = objective_and_gradient(net, st.theta, full, mu, frozen, nullptr);
        if (spec.verbose)
            std::cerr << "lbfgs " << to_string(r.status) << " after " << r.iterations << " iterations, loss "
                      << st.loss_after_lbfgs.total << "\n";
    }
    return out;
}

}  // namespace deepls
