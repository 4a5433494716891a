#pragma once

// Error metrics, capacity sweeps, Betti reciprocity and the quadratic-growth
// witness.

#include "deepls/analytic.hpp"
#include "deepls/benchmarks.hpp"
#include "deepls/loss.hpp"
#include "deepls/optimize.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <thread>

namespace deepls {

/// Batched field: P and u (and, where available, grad P and div u) at the
/// columns of X.
using FieldFunction = std::function<FieldBatch(const Matrix&)>;

inline FieldFunction network_field(const Network& net, const Vector& theta, bool spatial = false) {
    return [&net, theta, spatial](const Matrix& X) { return net.evaluate(theta, X, spatial); };
}

/// Wraps any closed-form solution exposing `FieldEval field(const Point&)`.
template <class Solution>
FieldFunction analytic_field(const Solution& sol) {
    return [sol](const Matrix& X) {
        const Eigen::Index n = X.cols(), d = X.rows();
        FieldBatch b{Vector(n), Matrix(d, n), Matrix(d, n), Vector(n)};
        for (Eigen::Index j = 0; j < n; ++j) {
            const FieldEval e = sol.field(X.col(j));
            b.P(j) = e.P;
            b.u.col(j) = e.u;
            b.grad_P.col(j) = e.grad_P;
            b.div_u(j) = e.div_u;
        }
        return b;
    };
}

/// Reference physical pressure and velocity.
struct Reference {
    std::function<double(const Point&)> pressure;
    std::function<Vector(const Point&)> velocity;
};

template <class Solution>
Reference make_reference(const Solution& sol) {
    return {[sol](const Point& x) { return sol.pressure(x); }, [sol](const Point& x) { return sol.velocity(x); }};
}

// ---------------------------------------------------------------------------
// L2 errors

/// Monte Carlo (int_Omega (f_hat - f_ref)^2)^{1/2}, including |Omega|.
inline double l2_error(const std::function<double(const Point&)>& f_hat,
                       const std::function<double(const Point&)>& f_ref, const Domain& domain, std::size_t n_mc,
                       std::uint64_t seed) {
    const Matrix X = sample_interior(domain, n_mc, seed);
    double s = 0.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double d = f_hat(X.col(j)) - f_ref(X.col(j));
        s += d * d;
    }
    return std::sqrt(domain.measure() * s / static_cast<double>(n_mc));
}

struct ErrorReport {
    double l2_p = 0.0;
    double l2_u = 0.0;
    double rel_p = 0.0;  // l2_p / ||p_ref||
    double rel_u = 0.0;
    std::size_t n_mc = 0;
    std::uint64_t seed = 0;
};

/// Errors of a trained (P, u) field against a reference, in physical
/// pressure (after the Lambert-W inverse) and velocity.
inline ErrorReport error_report(const FieldFunction& field, const MaterialModel& material, const Domain& domain,
                                const Reference& ref, std::size_t n_mc, std::uint64_t seed) {
    const Matrix X = sample_interior(domain, n_mc, seed);
    const FieldBatch b = field(X);
    double ep = 0.0, np = 0.0, eu = 0.0, nu = 0.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const Point x = X.col(j);
        const double p = hopf_cole_inverse(material, b.P(j));
        const double pr = ref.pressure(x);
        const Vector ur = ref.velocity(x);
        ep += (p - pr) * (p - pr);
        np += pr * pr;
        eu += (b.u.col(j) - ur).squaredNorm();
        nu += ur.squaredNorm();
    }
    const double scale = domain.measure() / static_cast<double>(n_mc);
    ErrorReport r;
    r.l2_p = std::sqrt(scale * ep);
    r.l2_u = std::sqrt(scale * eu);
    r.rel_p = np > 0.0 ? std::sqrt(ep / np) : r.l2_p;
    r.rel_u = nu > 0.0 ? std::sqrt(eu / nu) : r.l2_u;
    r.n_mc = n_mc;
    r.seed = seed;
    return r;
}

/// Relative L2 distance between two fields in physical pressure and velocity,
/// used as a cross-resolution consistency check where no closed form exists.
inline ErrorReport field_difference(const FieldFunction& a, const FieldFunction& b, const MaterialModel& material,
                                    const Domain& domain, std::size_t n_mc, std::uint64_t seed) {
    const Matrix X = sample_interior(domain, n_mc, seed);
    const FieldBatch fb = b(X);
    Vector pb(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) pb(j) = hopf_cole_inverse(material, fb.P(j));
    const FieldBatch fa = a(X);
    double ep = 0.0, np = 0.0, eu = 0.0, nu = 0.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double pa = hopf_cole_inverse(material, fa.P(j));
        ep += (pa - pb(j)) * (pa - pb(j));
        np += pb(j) * pb(j);
        eu += (fa.u.col(j) - fb.u.col(j)).squaredNorm();
        nu += fb.u.col(j).squaredNorm();
    }
    const double scale = domain.measure() / static_cast<double>(n_mc);
    ErrorReport r;
    r.l2_p = std::sqrt(scale * ep);
    r.l2_u = std::sqrt(scale * eu);
    r.rel_p = np > 0.0 ? std::sqrt(ep / np) : r.l2_p;
    r.rel_u = nu > 0.0 ? std::sqrt(eu / nu) : r.l2_u;
    r.n_mc = n_mc;
    r.seed = seed;
    return r;
}

// ---------------------------------------------------------------------------
// Betti reciprocity

struct BettiReport {
    double I12 = 0.0;
    double I21 = 0.0;
    double R_B = 0.0;
    double eta_B = 0.0;
    std::size_t n_quad = 0;
    bool degenerate = false;  // |I12| + |I21| = 0, eta_B undefined
};

/// One state of the reciprocity pair: its field and its boundary data.
struct BettiState {
    FieldFunction field;
    std::vector<BoundarySegment> segments;
};

/// I12 = int_{Gamma_p} P_p^(2) u^(1).n - int_{Gamma_u} u_n^(2) P^(1), I21 the
/// same with the states swapped, R_B = I12 - I21. Both states must share the
/// Gamma_p / Gamma_u split. Midpoint rule with n_quad points per segment.
inline BettiReport betti_residual(const BettiState& s1, const BettiState& s2, const MaterialModel& material,
                                  std::size_t n_quad = 2000) {
    if (s1.segments.size() != s2.segments.size())
        throw ConfigError("betti_residual: the two states must use the same boundary segments");
    BettiReport rep;
    rep.n_quad = n_quad;
    for (std::size_t i = 0; i < s1.segments.size(); ++i) {
        const auto& a = s1.segments[i];
        const auto& b = s2.segments[i];
        if (a.kind != b.kind || detail::piece_key(a.geometry) != detail::piece_key(b.geometry))
            throw ConfigError("betti_residual: segment '" + a.id + "' differs between the two states");
        const BoundaryQuadrature q = boundary_quadrature(a.geometry, n_quad);
        const FieldBatch f1 = s1.field(q.points);
        const FieldBatch f2 = s2.field(q.points);
        for (Eigen::Index j = 0; j < q.points.cols(); ++j) {
            const Point x = q.points.col(j);
            const double w = q.weights(j);
            if (a.is_pressure()) {
                const double Pp1 = transform_boundary_pressure(material, a.value(x));
                const double Pp2 = transform_boundary_pressure(material, b.value(x));
                rep.I12 += w * Pp2 * f1.u.col(j).dot(q.normals.col(j));
                rep.I21 += w * Pp1 * f2.u.col(j).dot(q.normals.col(j));
            } else {
                rep.I12 -= w * b.value(x) * f1.P(j);
                rep.I21 -= w * a.value(x) * f2.P(j);
            }
        }
    }
    rep.R_B = rep.I12 - rep.I21;
    const double denom = std::abs(rep.I12) + std::abs(rep.I21);
    if (denom > 0.0) {
        rep.eta_B = std::abs(rep.R_B) / denom;
    } else {
        rep.degenerate = true;
        rep.eta_B = std::numeric_limits<double>::quiet_NaN();
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Capacity sweep

/// Worker count: DEEPLS_THREADS if set, else the hardware concurrency.
inline std::size_t thread_budget() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("DEEPLS_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) n = static_cast<std::size_t>(v);
    }
    return n;
}

struct SweepRow {
    int depth = 0;
    int width = 0;
    int n_tot = 0;
    std::uint64_t seed = 0;
    ErrorReport errors;
    double wall_seconds = 0.0;
};

struct SweepSpec {
    TrainSpec base;  // problem, sampling and optimiser settings shared by every cell
    Reference reference;
    std::vector<int> depths;
    std::vector<int> widths;
    std::vector<std::uint64_t> seeds;
    std::size_t n_mc = 20000;
    std::size_t threads = 0;  // 0: thread_budget()
};

/// Trains one network per (depth, width, seed) cell. Cells run in parallel;
/// each one is deterministic given its seed.
inline std::vector<SweepRow> capacity_sweep(const SweepSpec& spec) {
    if (!spec.reference.pressure || !spec.reference.velocity)
        throw ConfigError("capacity_sweep: the benchmark needs an analytic reference");
    std::vector<SweepRow> rows;
    for (int d : spec.depths)
        for (int w : spec.widths)
            for (auto s : spec.seeds) rows.push_back({d, w, d * w, s, {}, 0.0});
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr err;
    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            try {
                SweepRow& row = rows[i];
                TrainSpec ts = spec.base;
                ts.network.depth = row.depth;
                ts.network.width = row.width;
                ts.network.seed = row.seed;
                ts.sampling_seed = row.seed;
                ts.verbose = false;
                const auto t0 = std::chrono::steady_clock::now();
                TrainResult tr = train(ts);
                row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                row.errors = error_report(network_field(tr.network, tr.state.theta), ts.problem.material,
                                          ts.problem.domain, spec.reference, spec.n_mc, mix_seed(row.seed, 77));
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
            }
        }
    };
    const std::size_t nt = std::min(rows.size(), spec.threads ? spec.threads : thread_budget());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
    return rows;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
    os << "depth,width,n_tot,seed,l2_p,l2_u,wall_seconds\n";
    os.precision(10);
    for (const auto& r : rows)
        os << r.depth << ',' << r.width << ',' << r.n_tot << ',' << r.seed << ',' << r.errors.l2_p << ','
           << r.errors.l2_u << ',' << r.wall_seconds << '\n';
}

inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// Quadratic growth

/// Deterministic equal-weight rule for an annulus plus midpoint rules on the
/// problem's boundary segments.
inline CollocationBatch annulus_quadrature(const Problem& problem, std::size_t n_r, std::size_t n_theta,
                                           std::size_t n_boundary) {
    const auto* an = problem.domain.as<Annulus>();
    if (!an) throw ConfigError("annulus_quadrature: domain is not an annulus");
    CollocationBatch batch;
    batch.interior.resize(2, static_cast<Eigen::Index>(n_r * n_theta));
    const double ri2 = an->r_inner * an->r_inner, ro2 = an->r_outer * an->r_outer;
    Eigen::Index c = 0;
    for (std::size_t i = 0; i < n_r; ++i) {
        // rings of equal area, node at the area midpoint
        const double r = std::sqrt(ri2 + (static_cast<double>(i) + 0.5) / static_cast<double>(n_r) * (ro2 - ri2));
        for (std::size_t k = 0; k < n_theta; ++k) {
            const double th = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(n_theta);
            batch.interior.col(c++) = Eigen::Vector2d(r * std::cos(th), r * std::sin(th));
        }
    }
    for (std::size_t s = 0; s < problem.segments.size(); ++s) {
        const BoundaryQuadrature q = boundary_quadrature(problem.segments[s].geometry, n_boundary);
        batch.boundary.push_back({s, q.points, q.normals});
    }
    return batch;
}

struct QuadraticGrowth {
    std::vector<double> t;
    std::vector<double> gap;  // Pi[U* + t dU] - Pi[U*]
    double exponent = 0.0;    // least-squares slope of log gap against log t
    double constant = 0.0;    // gap ~ constant * t^exponent
    double perturbation_norm = 0.0;
};

/// U-norm^2 = ||dP||_H1^2 + ||du||^2 + ||div du||^2 + ||du.n||^2 on Gamma_u,
/// using the equal weights of the quadrature batch.
template <class FieldModel>
double u_norm_squared(const FieldModel& du, const CollocationBatch& q, const Problem& problem) {
    const double wi = problem.domain.measure() / static_cast<double>(q.interior.cols());
    double s = 0.0;
    for (Eigen::Index j = 0; j < q.interior.cols(); ++j) {
        const FieldEval e = du(Point(q.interior.col(j)));
        s += wi * (e.P * e.P + e.grad_P.squaredNorm() + e.u.squaredNorm() + e.div_u * e.div_u);
    }
    for (const auto& b : q.boundary) {
        const auto& seg = problem.segments[b.segment];
        if (seg.is_pressure()) continue;
        const double wb = seg.measure() / static_cast<double>(b.points.cols());
        for (Eigen::Index j = 0; j < b.points.cols(); ++j) {
            const double un = du(Point(b.points.col(j))).u.dot(b.normals.col(j));
            s += wb * un * un;
        }
    }
    return s;
}

/// Evaluates Pi[U* + t dU] - Pi[U*] for the given t values, with dU scaled
/// to unit U-norm, and fits the growth exponent.
template <class Exact, class Perturbation>
QuadraticGrowth quadratic_growth(const Exact& exact, const Perturbation& du, const Problem& problem,
                                 const CollocationBatch& q, const ResidualWeights& weights,
                                 const std::vector<double>& ts) {
    QuadraticGrowth out;
    out.perturbation_norm = std::sqrt(u_norm_squared(du, q, problem));
    const double scale = 1.0 / out.perturbation_norm;
    const double base = empirical_objective(exact, q, problem, weights).total;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double t : ts) {
        auto model = [&](const Point& x) {
            FieldEval a = exact(x);
            const FieldEval b = du(x);
            const double ts_ = t * scale;
            a.P += ts_ * b.P;
            a.u += ts_ * b.u;
            a.grad_P += ts_ * b.grad_P;
            a.div_u += ts_ * b.div_u;
            return a;
        };
        const double g = empirical_objective(model, q, problem, weights).total - base;
        out.t.push_back(t);
        out.gap.push_back(g);
        const double lx = std::log(t), ly = std::log(g);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(ts.size());
    out.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    out.constant = std::exp((sy - out.exponent * sx) / n);
    return out;
}

}  // namespace deepls
