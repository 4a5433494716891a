#pragma once

// Checks shared by the unit tests and the acceptance runner.

#include "deepls/deepls.hpp"

#include <algorithm>
#include <cmath>

namespace checks {

using namespace deepls;

inline NetworkConfig small_config(int dim, int depth, int width, int n_f, Activation act, std::uint64_t seed) {
    NetworkConfig c;
    c.dim = dim;
    c.depth = depth;
    c.width = width;
    c.frequencies = default_frequencies(n_f, 2.0);
    c.activation = act;
    c.seed = seed;
    return c;
}

/// Largest relative error of grad P and div u against central differences
/// (h = 1e-5) over `trials` random networks and points.
inline double spatial_derivative_error(int trials, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const int dim = t % 2 ? 3 : 2;
        const Network net(small_config(dim, 1 + t % 3, 6 + t % 5, t % 3, Activation::tanh, seed + t));
        const Vector theta = net.init_parameters(seed + 1000 + t).values;
        Point x(dim);
        for (int a = 0; a < dim; ++a) x(a) = rng.uniform(-1.0, 1.0);
        const FieldEval e = net.forward_with_spatial_derivs(theta, x);
        const double h = 1e-5;
        Vector g_fd(dim);
        double div_fd = 0.0, div_scale = 0.0;
        for (int a = 0; a < dim; ++a) {
            Point xp = x, xm = x;
            xp(a) += h;
            xm(a) -= h;
            const auto [Pp, up] = net.forward(theta, xp);
            const auto [Pm, um] = net.forward(theta, xm);
            g_fd(a) = (Pp - Pm) / (2 * h);
            const double du = (up(a) - um(a)) / (2 * h);
            div_fd += du;
            div_scale += std::abs(du);
        }
        worst = std::max(worst, (e.grad_P - g_fd).norm() / std::max(g_fd.norm(), 1e-12));
        worst = std::max(worst, std::abs(e.div_u - div_fd) / std::max(div_scale, 1e-12));
    }
    return worst;
}

/// Largest relative error of the exact objective gradient against symmetric
/// difference quotients (eps = 1e-6) along `directions` random directions.
inline double parameter_gradient_error(int directions, std::uint64_t seed) {
    const Problem pb = footing_problem();
    SamplingPlan plan;
    plan.n_interior = 40;
    plan.n_boundary = 30;
    const PreparedBatch batch = prepare_batch(sample_collocation(pb.domain, pb.segments, plan, seed), pb);
    const Network net(small_config(2, 3, 8, 2, Activation::tanh, seed));
    const Vector theta = net.init_parameters(seed).values;
    const ResidualWeights w = coercivity_weights(pb.material.mu, pb.material.k_min, 1.0, 1.0);
    Vector g;
    objective_and_gradient(net, theta, batch, pb.material.mu, w, &g);
    Rng rng(seed + 7);
    double worst = 0.0;
    const double eps = 1e-6;
    for (int k = 0; k < directions; ++k) {
        Vector d(theta.size());
        for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = rng.uniform(-1.0, 1.0);
        d.normalize();
        const double fp = objective_and_gradient(net, theta + eps * d, batch, pb.material.mu, w, nullptr).total;
        const double fm = objective_and_gradient(net, theta - eps * d, batch, pb.material.mu, w, nullptr).total;
        const double fd = (fp - fm) / (2 * eps);
        const double an = g.dot(d);
        worst = std::max(worst, std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-12}));
    }
    return worst;
}

/// Residual magnitudes and empirical objective of an exact solution.
struct Annihilation {
    double max_residual = 0.0;
    double objective = 0.0;
};

template <class Solution>
Annihilation annihilation(const Solution& sol, const Problem& pb, std::size_t n, std::uint64_t seed) {
    Annihilation out;
    SamplingPlan plan;
    plan.n_interior = n;
    plan.n_boundary = n;
    const CollocationBatch batch = sample_collocation(pb.domain, pb.segments, plan, seed);
    const MaterialModel& m = pb.material;
    for (Eigen::Index j = 0; j < batch.interior.cols(); ++j) {
        const Point x = batch.interior.col(j);
        const FieldEval e = sol.field(x);
        out.max_residual = std::max(out.max_residual, residual_r1(e, m, x).cwiseAbs().maxCoeff());
        out.max_residual = std::max(out.max_residual, std::abs(residual_r2(e)));
    }
    for (const auto& s : batch.boundary) {
        const auto& seg = pb.segments[s.segment];
        for (Eigen::Index j = 0; j < s.points.cols(); ++j) {
            const Point x = s.points.col(j);
            const FieldEval e = sol.field(x);
            const double r = seg.is_pressure() ? residual_r4(e, transform_boundary_pressure(m, seg.value(x)))
                                               : residual_r3(e, s.normals.col(j), seg.value(x));
            out.max_residual = std::max(out.max_residual, std::abs(r));
        }
    }
    const ResidualWeights w = coercivity_weights(m.mu, m.k_min, 1.0, 1.0);
    out.objective = empirical_objective([&](const Point& x) { return sol.field(x); }, batch, pb, w).total;
    return out;
}

/// Mid-height of each layer of a layered rectangle.
inline std::vector<double> layer_midheights(const LayeredParams& prm) {
    std::vector<double> edges{0.0};
    edges.insert(edges.end(), prm.layer_breaks.begin(), prm.layer_breaks.end());
    edges.push_back(prm.height);
    std::vector<double> mids;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) mids.push_back(0.5 * (edges[i] + edges[i + 1]));
    return mids;
}

/// Smooth perturbation of (P, u) with exact derivatives, used by the
/// quadratic-growth witness.
inline FieldEval smooth_perturbation(const Point& x) {
    const double X = x(0), Y = x(1);
    FieldEval e;
    e.P = std::sin(2.0 * X) * std::cos(Y) + 0.5 * X * Y;
    e.grad_P = Eigen::Vector2d(2.0 * std::cos(2.0 * X) * std::cos(Y) + 0.5 * Y, -std::sin(2.0 * X) * std::sin(Y) + 0.5 * X);
    e.u = Eigen::Vector2d(std::cos(X + Y), X * X - Y);
    e.div_u = -std::sin(X + Y) - 1.0;
    return e;
}

}  // namespace checks
