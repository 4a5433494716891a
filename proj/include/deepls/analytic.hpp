#pragma once

// Closed-form reference solutions: concentric cylinders, concentric spheres
// and horizontally layered media. The footing problem has none.

#include "deepls/errors.hpp"
#include "deepls/network.hpp"
#include "deepls/transform.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace deepls {

struct RadialParams {
    double r_inner = 0.3;
    double r_outer = 1.0;
    double p_inner = 10.0;
    double p_outer = 1.0;
    double k0 = 1.0;
    double mu = 1.0;
    double beta = 1.0;
    double p_atm = 1.0;

    MaterialModel material(int dim) const {
        MaterialModel m;
        m.k0 = Permeability::scalar(dim, k0);
        m.beta = beta;
        m.p_atm = p_atm;
        m.mu = mu;
        m.k_min = m.k_max = k0;
        return m;
    }
};

/// Radially symmetric solution between two concentric circles (dim 2) or
/// spheres (dim 3) held at p_inner and p_outer.
class RadialSolution {
public:
    RadialSolution(const RadialParams& prm, int dim) : prm_(prm), dim_(dim), mat_(prm.material(dim)) {
        if (!(prm.r_inner > 0.0 && prm.r_inner < prm.r_outer))
            throw ConfigError("radial solution requires 0 < r_inner < r_outer");
        if (!(prm.k0 > 0.0 && prm.mu > 0.0)) throw ConfigError("radial solution requires k0 > 0 and mu > 0");
        P_inner_ = transform_boundary_pressure(mat_, prm.p_inner);
        P_outer_ = transform_boundary_pressure(mat_, prm.p_outer);
    }

    const RadialParams& params() const { return prm_; }
    const MaterialModel& material() const { return mat_; }
    int dim() const { return dim_; }
    double P_inner() const { return P_inner_; }
    double P_outer() const { return P_outer_; }

    double P(double r) const {
        check(r);
        if (dim_ == 2)
            return P_inner_ + (P_outer_ - P_inner_) * std::log(r / prm_.r_inner) / std::log(prm_.r_outer / prm_.r_inner);
        return P_outer_ + (P_inner_ - P_outer_) * shell_factor() * (1.0 / r - 1.0 / prm_.r_outer);
    }

    double dP_dr(double r) const {
        check(r);
        if (dim_ == 2) return (P_outer_ - P_inner_) / (std::log(prm_.r_outer / prm_.r_inner) * r);
        return -(P_inner_ - P_outer_) * shell_factor() / (r * r);
    }

    double p(double r) const { return hopf_cole_inverse(mat_, P(r)); }

    /// Radial Darcy velocity; P_inner - P_outer = (p_i - p_o) + beta p_atm ln(p_i/p_o).
    double u_r(double r) const { return -(prm_.k0 / prm_.mu) * dP_dr(r); }

    double radius(const Point& x) const { return x.norm(); }

    FieldEval field(const Point& x) const {
        const double r = radius(x);
        const Vector er = x / r;
        FieldEval e;
        e.P = P(r);
        e.grad_P = dP_dr(r) * er;
        e.u = u_r(r) * er;
        e.div_u = 0.0;
        return e;
    }

    double pressure(const Point& x) const { return p(radius(x)); }
    Vector velocity(const Point& x) const { return field(x).u; }

private:
    double shell_factor() const { return prm_.r_inner * prm_.r_outer / (prm_.r_outer - prm_.r_inner); }

    void check(double r) const {
        const double tol = 1e-12 * prm_.r_outer;
        if (!(r >= prm_.r_inner - tol && r <= prm_.r_outer + tol)) {
            std::ostringstream os;
            os << "radius " << r << " outside [" << prm_.r_inner << ", " << prm_.r_outer << "]";
            throw DomainError(os.str());
        }
    }

    RadialParams prm_;
    int dim_;
    MaterialModel mat_;
    double P_inner_ = 0.0;
    double P_outer_ = 0.0;
};

inline RadialSolution cylinder_solution(const RadialParams& prm) { return RadialSolution(prm, 2); }
inline RadialSolution sphere_solution(const RadialParams& prm) { return RadialSolution(prm, 3); }

/// The beta = 0 (classical Darcy) specialisation.
inline RadialSolution darcy_baseline(RadialParams prm, int dim = 2) {
    prm.beta = 0.0;
    return RadialSolution(prm, dim);
}

struct LayeredParams {
    double length = 5.0;
    double height = 4.0;
    double p_left = 10.0;
    double p_right = 1.0;
    std::vector<double> layer_breaks{0.8, 1.6, 2.4, 3.2};
    std::vector<double> layer_k0{1.0, 10.0, 1.0, 10.0, 1.0};
    double mu = 1.0;
    double beta = 1.0;
    double p_atm = 1.0;

    MaterialModel material() const {
        MaterialModel m;
        m.k0 = Permeability::layered(2, layer_breaks, layer_k0);
        m.beta = beta;
        m.p_atm = p_atm;
        m.mu = mu;
        m.k_min = *std::min_element(layer_k0.begin(), layer_k0.end());
        m.k_max = *std::max_element(layer_k0.begin(), layer_k0.end());
        return m;
    }
};

/// Flow through horizontal layers driven by a left/right pressure drop with
/// no-flux top and bottom walls: P linear in x, u = (k(y)/mu) (P_l - P_r)/L e_x.
class LayeredSolution {
public:
    explicit LayeredSolution(const LayeredParams& prm) : prm_(prm), mat_(prm.material()) {
        if (!(prm.length > 0.0 && prm.height > 0.0)) throw ConfigError("layered solution requires L, H > 0");
        P_left_ = transform_boundary_pressure(mat_, prm.p_left);
        P_right_ = transform_boundary_pressure(mat_, prm.p_right);
    }

    const LayeredParams& params() const { return prm_; }
    const MaterialModel& material() const { return mat_; }
    double P_left() const { return P_left_; }
    double P_right() const { return P_right_; }

    /// (P_left - P_right) / L.
    double gradient_drop() const { return (P_left_ - P_right_) / prm_.length; }

    double P(double x) const { return P_left_ + (P_right_ - P_left_) * x / prm_.length; }
    double u_x(double y) const { return mat_.k0.scalar_at(Point{{0.0, y}}) / prm_.mu * gradient_drop(); }

    FieldEval field(const Point& x) const {
        FieldEval e;
        e.P = P(x(0));
        e.grad_P = Vector{{-gradient_drop(), 0.0}};
        e.u = Vector{{u_x(x(1)), 0.0}};
        e.div_u = 0.0;
        return e;
    }

    double pressure(const Point& x) const { return hopf_cole_inverse(mat_, P(x(0))); }
    Vector velocity(const Point& x) const { return field(x).u; }

private:
    LayeredParams prm_;
    MaterialModel mat_;
    double P_left_ = 0.0;
    double P_right_ = 0.0;
};

inline LayeredSolution layered_solution(const LayeredParams& prm) { return LayeredSolution(prm); }

}  // namespace deepls
