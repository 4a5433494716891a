#pragma once

// Residuals of the transformed Darcy system, the weighted least-squares
// functional in its Monte Carlo form, and loss-weight selection.

#include "deepls/errors.hpp"
#include "deepls/network.hpp"
#include "deepls/problem.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

namespace deepls {

enum class WeightMode { fixed, coercivity, adaptive };

inline std::string to_string(WeightMode m) {
    switch (m) {
        case WeightMode::fixed: return "fixed";
        case WeightMode::coercivity: return "coercivity";
        case WeightMode::adaptive: return "adaptive";
    }
    return "?";
}

inline WeightMode weight_mode_from_string(const std::string& s) {
    if (s == "fixed") return WeightMode::fixed;
    if (s == "coercivity") return WeightMode::coercivity;
    if (s == "adaptive") return WeightMode::adaptive;
    throw ConfigError("unknown weight mode '" + s + "' (expected fixed, coercivity or adaptive)");
}

struct ResidualWeights {
    std::array<double, 4> lambda{1.0, 1.0, 1.0, 1.0};
    WeightMode mode = WeightMode::fixed;
    double alpha = 1.0;
    double epsilon = 1e-8;
    std::size_t window = 50;
    double trigger_ratio = 5.0;

    void validate() const {
        for (double l : lambda)
            if (!(l > 0.0)) throw ConfigError("loss weights must be positive");
        if (!(alpha > 0.0)) throw ConfigError("adaptive alpha must be positive");
        if (!(epsilon > 0.0)) throw ConfigError("adaptive epsilon must be positive");
        if (window < 1) throw ConfigError("adaptive window must be >= 1");
        if (!(trigger_ratio > 1.0)) throw ConfigError("adaptive trigger ratio must exceed 1");
    }
};

struct LossBreakdown {
    std::array<double, 4> pi{};
    std::array<double, 4> lambda{1.0, 1.0, 1.0, 1.0};
    double total = 0.0;
    std::size_t n_interior = 0;
    std::size_t n_gamma_u = 0;
    std::size_t n_gamma_p = 0;

    /// Components that have sample points behind them.
    std::array<bool, 4> active() const { return {n_interior > 0, n_interior > 0, n_gamma_u > 0, n_gamma_p > 0}; }
};

enum class Stage { adam, lbfgs };

struct LossRecord {
    std::size_t iter = 0;
    Stage stage = Stage::adam;
    LossBreakdown loss;
};

/// r = |(prev - curr) / (prev + eps)|.
inline double relative_decrease(double prev, double curr, double epsilon) {
    return std::abs((prev - curr) / (prev + epsilon));
}

class LossHistory {
public:
    void push(LossRecord r) { records_.push_back(r); }
    const std::vector<LossRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const LossRecord& back() const { return records_.back(); }

    /// Mean relative decrease of each component over the last `window`
    /// consecutive record pairs.
    std::array<double, 4> moving_average(std::size_t window, double epsilon) const {
        std::array<double, 4> avg{};
        if (records_.size() < 2) return avg;
        const std::size_t pairs = std::min(window, records_.size() - 1);
        for (std::size_t t = records_.size() - pairs; t < records_.size(); ++t)
            for (int m = 0; m < 4; ++m)
                avg[m] += relative_decrease(records_[t - 1].loss.pi[m], records_[t].loss.pi[m], epsilon);
        for (double& a : avg) a /= static_cast<double>(pairs);
        return avg;
    }

    /// CSV with columns iter, pi_1..pi_4, lambda_1..lambda_4, total.
    void write_csv(std::ostream& os) const {
        os << "iter,pi_1,pi_2,pi_3,pi_4,lambda_1,lambda_2,lambda_3,lambda_4,total\n";
        os.precision(17);
        for (const auto& r : records_) {
            os << r.iter;
            for (double v : r.loss.pi) os << ',' << v;
            for (double v : r.loss.lambda) os << ',' << v;
            os << ',' << r.loss.total << '\n';
        }
    }

private:
    std::vector<LossRecord> records_;
};

// ---------------------------------------------------------------------------
// Residuals

/// R1 = mu K0(x)^{-1} u + grad P.
inline Vector residual_r1(const FieldEval& e, const MaterialModel& m, const Point& x) {
    const Matrix k = m.k0.at(x);
    Eigen::LDLT<Matrix> ldlt(k);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw ConfigError("K0 is not positive definite (ellipticity violated)");
    return m.mu * ldlt.solve(e.u) + e.grad_P;
}

/// R2 = div u.
inline double residual_r2(const FieldEval& e) { return e.div_u; }

/// R3 = u . n - u_n.
inline double residual_r3(const FieldEval& e, const Point& normal, double u_n) { return e.u.dot(normal) - u_n; }

/// R4 = P - P_p.
inline double residual_r4(const FieldEval& e, double P_p) { return e.P - P_p; }

/// Principal square root of a symmetric positive definite matrix.
inline Matrix spd_sqrt(const Matrix& k) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(k);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0)
        throw ConfigError("spd_sqrt: matrix is not positive definite");
    return eig.operatorSqrt();
}

/// Weights from the coercivity argument:
/// lambda_1 = 4 mu / k_min, lambda_2 = lambda_3 = 16 mu C_div^2 / k_min^2, lambda_4 = 1.
/// The Poincare constant does not enter the recipe; it is accepted so that
/// both domain constants travel together through configuration.
inline ResidualWeights coercivity_weights(double mu, double k_min, double c_div, double c_p) {
    if (!(mu > 0.0 && k_min > 0.0 && c_div > 0.0 && c_p > 0.0))
        throw ConfigError("coercivity weights need positive mu, k_min, C_div and C_P");
    ResidualWeights w;
    w.mode = WeightMode::coercivity;
    const double l2 = 16.0 * mu * mu * c_div * c_div / (k_min * k_min);  // 4 C_div^2 eps^2, eps = 2 mu / k_min
    w.lambda = {4.0 * mu / k_min, l2, l2, 1.0};
    return w;
}

/// lambda_m = 1 + alpha (r_max - r_m) / (r_max - r_min + eps) over the active
/// components; inactive components keep their weight.
inline std::array<double, 4> rebalanced_weights(const std::array<double, 4>& rbar, const std::array<double, 4>& current,
                                                const std::array<bool, 4>& active, double alpha, double epsilon) {
    double rmax = -1.0, rmin = 1e300;
    for (int m = 0; m < 4; ++m)
        if (active[m]) {
            rmax = std::max(rmax, rbar[m]);
            rmin = std::min(rmin, rbar[m]);
        }
    std::array<double, 4> out = current;
    if (rmax < 0.0) return out;
    for (int m = 0; m < 4; ++m)
        if (active[m]) out[m] = 1.0 + alpha * (rmax - rbar[m]) / (rmax - rmin + epsilon);
    return out;
}

/// Rebalances the weights when max r / min r over the moving window exceeds
/// the trigger ratio; otherwise returns them unchanged.
inline ResidualWeights adaptive_reweight(const LossHistory& history, const ResidualWeights& weights) {
    if (history.size() < std::max<std::size_t>(2, weights.window)) return weights;
    const auto rbar = history.moving_average(weights.window, weights.epsilon);
    const auto active = history.back().loss.active();
    double rmax = -1.0, rmin = 1e300;
    for (int m = 0; m < 4; ++m)
        if (active[m]) {
            rmax = std::max(rmax, rbar[m]);
            rmin = std::min(rmin, rbar[m]);
        }
    if (!(rmax > 0.0)) return weights;
    if (rmin > 0.0 && rmax / rmin <= weights.trigger_ratio) return weights;
    ResidualWeights out = weights;
    out.lambda = rebalanced_weights(rbar, weights.lambda, active, weights.alpha, weights.epsilon);
    return out;
}

// ---------------------------------------------------------------------------
// Empirical objective, pointwise route

namespace detail {

inline void finish(LossBreakdown& lb, const ResidualWeights& w) {
    lb.lambda = w.lambda;
    lb.total = 0.0;
    for (int m = 0; m < 4; ++m) lb.total += w.lambda[m] * lb.pi[m];
}

inline void require_points(const Problem& problem, std::size_t n_u, std::size_t n_p) {
    bool has_u = false, has_p = false;
    for (const auto& s : problem.segments) (s.is_pressure() ? has_p : has_u) = true;
    if (has_p && n_p == 0) throw ConfigError("empty Gamma_p point set: the pressure term cannot be evaluated");
    if (has_u && n_u == 0) throw ConfigError("empty Gamma_u point set: the flux term cannot be evaluated");
}

}  // namespace detail

/// Monte Carlo least-squares objective for any field model callable as
/// `FieldEval model(const Point&)`. Evaluates every term pointwise, with the
/// R1 weighting mu^{-1/2} sqrt(K0) formed explicitly.
template <class FieldModel>
LossBreakdown empirical_objective(const FieldModel& model, const CollocationBatch& batch, const Problem& problem,
                                  const ResidualWeights& weights) {
    const MaterialModel& mat = problem.material;
    LossBreakdown lb;
    lb.n_interior = static_cast<std::size_t>(batch.interior.cols());
    for (const auto& s : batch.boundary)
        (problem.segments[s.segment].is_pressure() ? lb.n_gamma_p : lb.n_gamma_u) += static_cast<std::size_t>(s.points.cols());
    detail::require_points(problem, lb.n_gamma_u, lb.n_gamma_p);

    const double inv_sqrt_mu = 1.0 / std::sqrt(mat.mu);
    for (Eigen::Index j = 0; j < batch.interior.cols(); ++j) {
        const Point x = batch.interior.col(j);
        const FieldEval e = model(x);
        const Vector w = inv_sqrt_mu * (spd_sqrt(mat.k0.at(x)) * residual_r1(e, mat, x));
        lb.pi[0] += w.squaredNorm();
        lb.pi[1] += residual_r2(e) * residual_r2(e);
    }
    for (const auto& s : batch.boundary) {
        const auto& seg = problem.segments[s.segment];
        for (Eigen::Index j = 0; j < s.points.cols(); ++j) {
            const Point x = s.points.col(j);
            const FieldEval e = model(x);
            if (seg.is_pressure()) {
                const double r = residual_r4(e, transform_boundary_pressure(mat, seg.value(x)));
                lb.pi[3] += r * r;
            } else {
                const double r = residual_r3(e, s.normals.col(j), seg.value(x));
                lb.pi[2] += r * r;
            }
        }
    }
    auto avg = [](double sum, std::size_t n) { return n ? sum / (2.0 * static_cast<double>(n)) : 0.0; };
    lb.pi[0] = avg(lb.pi[0], lb.n_interior);
    lb.pi[1] = avg(lb.pi[1], lb.n_interior);
    lb.pi[2] = avg(lb.pi[2], lb.n_gamma_u);
    lb.pi[3] = avg(lb.pi[3], lb.n_gamma_p);
    detail::finish(lb, weights);
    return lb;
}

// ---------------------------------------------------------------------------
// Empirical objective, batched network route

/// A collocation batch flattened for batched network evaluation: columns
/// [0, n_interior) are interior points, followed by the Gamma_u points and
/// then the Gamma_p points. Boundary data are pre-evaluated (P_p already
/// transformed) and K0 is cached per interior point.
struct PreparedBatch {
    Matrix points;
    Eigen::Index n_interior = 0;
    Eigen::Index n_flux = 0;
    Eigen::Index n_pressure = 0;
    int dim = 2;
    bool isotropic = true;
    Vector k_scalar;  // isotropic: k(x) per interior point
    Matrix k0;        // anisotropic: column-major dim x dim tensor per interior point
    Matrix k0_inv;
    Matrix flux_normals;
    Vector flux_values;
    Vector pressure_values;

    /// Same boundary rows, interior restricted to the given columns.
    PreparedBatch subset(const std::vector<Eigen::Index>& rows) const {
        PreparedBatch out = *this;
        const auto nb = n_flux + n_pressure;
        out.n_interior = static_cast<Eigen::Index>(rows.size());
        out.points.resize(dim, out.n_interior + nb);
        for (Eigen::Index j = 0; j < out.n_interior; ++j) out.points.col(j) = points.col(rows[static_cast<std::size_t>(j)]);
        out.points.rightCols(nb) = points.rightCols(nb);
        if (isotropic) {
            out.k_scalar.resize(out.n_interior);
            for (Eigen::Index j = 0; j < out.n_interior; ++j) out.k_scalar(j) = k_scalar(rows[static_cast<std::size_t>(j)]);
        } else {
            out.k0.resize(k0.rows(), out.n_interior);
            out.k0_inv.resize(k0.rows(), out.n_interior);
            for (Eigen::Index j = 0; j < out.n_interior; ++j) {
                out.k0.col(j) = k0.col(rows[static_cast<std::size_t>(j)]);
                out.k0_inv.col(j) = k0_inv.col(rows[static_cast<std::size_t>(j)]);
            }
        }
        return out;
    }
};

inline PreparedBatch prepare_batch(const CollocationBatch& batch, const Problem& problem) {
    const MaterialModel& mat = problem.material;
    PreparedBatch pb;
    pb.dim = problem.dim();
    pb.n_interior = batch.interior.cols();
    std::vector<std::pair<Point, std::pair<Point, double>>> flux;
    std::vector<std::pair<Point, double>> pres;
    for (const auto& s : batch.boundary) {
        const auto& seg = problem.segments[s.segment];
        for (Eigen::Index j = 0; j < s.points.cols(); ++j) {
            const Point x = s.points.col(j);
            if (seg.is_pressure()) pres.push_back({x, transform_boundary_pressure(mat, seg.value(x))});
            else flux.push_back({x, {s.normals.col(j), seg.value(x)}});
        }
    }
    pb.n_flux = static_cast<Eigen::Index>(flux.size());
    pb.n_pressure = static_cast<Eigen::Index>(pres.size());
    detail::require_points(problem, flux.size(), pres.size());

    pb.points.resize(pb.dim, pb.n_interior + pb.n_flux + pb.n_pressure);
    pb.points.leftCols(pb.n_interior) = batch.interior;
    pb.flux_normals.resize(pb.dim, pb.n_flux);
    pb.flux_values.resize(pb.n_flux);
    for (Eigen::Index j = 0; j < pb.n_flux; ++j) {
        const auto& f = flux[static_cast<std::size_t>(j)];
        pb.points.col(pb.n_interior + j) = f.first;
        pb.flux_normals.col(j) = f.second.first;
        pb.flux_values(j) = f.second.second;
    }
    pb.pressure_values.resize(pb.n_pressure);
    for (Eigen::Index j = 0; j < pb.n_pressure; ++j) {
        pb.points.col(pb.n_interior + pb.n_flux + j) = pres[static_cast<std::size_t>(j)].first;
        pb.pressure_values(j) = pres[static_cast<std::size_t>(j)].second;
    }

    pb.isotropic = mat.k0.isotropic();
    if (pb.isotropic) {
        pb.k_scalar.resize(pb.n_interior);
        for (Eigen::Index j = 0; j < pb.n_interior; ++j) pb.k_scalar(j) = mat.k0.scalar_at(batch.interior.col(j));
    } else {
        pb.k0.resize(pb.dim * pb.dim, pb.n_interior);
        pb.k0_inv.resize(pb.dim * pb.dim, pb.n_interior);
        for (Eigen::Index j = 0; j < pb.n_interior; ++j) {
            const Matrix k = mat.k0.at(batch.interior.col(j));
            pb.k0.col(j) = Eigen::Map<const Vector>(k.data(), k.size());
            const Matrix ki = k.inverse();
            pb.k0_inv.col(j) = Eigen::Map<const Vector>(ki.data(), ki.size());
        }
    }
    return pb;
}

/// Objective value and, when `grad` is non-null, its exact gradient with
/// respect to the network parameters. The R1 term uses the identity
/// |mu^{-1/2} sqrt(K0) R1|^2 = R1^T K0 R1 / mu.
inline LossBreakdown objective_and_gradient(const Network& net, const Vector& theta, const PreparedBatch& pb,
                                            double mu, const ResidualWeights& weights, Vector* grad) {
    const int nd = pb.dim;
    const Eigen::Index ni = pb.n_interior, nf = pb.n_flux, np = pb.n_pressure;
    Network::Tape tape;
    const FieldBatch fb = net.evaluate(theta, pb.points, true, grad ? &tape : nullptr);

    LossBreakdown lb;
    lb.n_interior = static_cast<std::size_t>(ni);
    lb.n_gamma_u = static_cast<std::size_t>(nf);
    lb.n_gamma_p = static_cast<std::size_t>(np);
    const auto& lam = weights.lambda;

    // interior residuals
    Matrix r1(nd, ni);
    Matrix kr1(nd, ni);  // K0 R1
    if (pb.isotropic) {
        for (Eigen::Index j = 0; j < ni; ++j) {
            const double k = pb.k_scalar(j);
            r1.col(j) = (mu / k) * fb.u.col(j) + fb.grad_P.col(j);
            kr1.col(j) = k * r1.col(j);
        }
    } else {
        for (Eigen::Index j = 0; j < ni; ++j) {
            const Eigen::Map<const Matrix> k(pb.k0.col(j).data(), nd, nd);
            const Eigen::Map<const Matrix> ki(pb.k0_inv.col(j).data(), nd, nd);
            r1.col(j) = mu * (ki * fb.u.col(j)) + fb.grad_P.col(j);
            kr1.col(j) = k * r1.col(j);
        }
    }
    const auto div = fb.div_u.head(ni);
    const Vector r3 = nf ? Vector((pb.flux_normals.cwiseProduct(fb.u.middleCols(ni, nf))).colwise().sum().transpose() - pb.flux_values)
                         : Vector();
    const Vector r4 = np ? Vector(fb.P.tail(np) - pb.pressure_values) : Vector();

    const double ci = ni ? 1.0 / static_cast<double>(ni) : 0.0;
    const double cu = nf ? 1.0 / static_cast<double>(nf) : 0.0;
    const double cp = np ? 1.0 / static_cast<double>(np) : 0.0;
    lb.pi[0] = 0.5 * ci / mu * r1.cwiseProduct(kr1).sum();
    lb.pi[1] = 0.5 * ci * div.squaredNorm();
    lb.pi[2] = nf ? 0.5 * cu * r3.squaredNorm() : 0.0;
    lb.pi[3] = np ? 0.5 * cp * r4.squaredNorm() : 0.0;
    detail::finish(lb, weights);

    if (grad) {
        const Eigen::Index n = pb.points.cols();
        FieldAdjoints adj;
        adj.P = Vector::Zero(n);
        adj.u = Matrix::Zero(nd, n);
        adj.grad_P = Matrix::Zero(nd, n);
        adj.div_u = Vector::Zero(n);
        adj.u.leftCols(ni) = (lam[0] * ci) * r1;
        adj.grad_P.leftCols(ni) = (lam[0] * ci / mu) * kr1;
        adj.div_u.head(ni) = (lam[1] * ci) * div;
        for (Eigen::Index j = 0; j < nf; ++j) adj.u.col(ni + j) += (lam[2] * cu * r3(j)) * pb.flux_normals.col(j);
        if (np) adj.P.tail(np) = (lam[3] * cp) * r4;
        *grad = net.pullback(theta, tape, adj);
    }
    return lb;
}

inline Vector objective_gradient(const Network& net, const Vector& theta, const PreparedBatch& pb, double mu,
                                 const ResidualWeights& weights) {
    Vector g;
    objective_and_gradient(net, theta, pb, mu, weights, &g);
    return g;
}

}  // namespace deepls
