#pragma once

// Klinkenberg constitutive model, the Hopf-Cole change of variables and its
// Lambert-W inverse.

#include "deepls/errors.hpp"
#include "deepls/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace deepls {

/// Intrinsic permeability K0(x). Either spatially uniform (scalar shorthand
/// k0*I or a full symmetric tensor) or horizontally layered with a scalar
/// value per layer. Layer intervals are half-open [y_i, y_{i+1}).
class Permeability {
public:
    struct Uniform {
        Matrix tensor;
    };
    struct Layered {
        std::vector<double> breaks;  // interior interface heights, increasing
        std::vector<double> values;  // breaks.size() + 1 scalars
    };

    Permeability() : repr_(Uniform{Matrix::Identity(2, 2)}) {}

    static Permeability scalar(int dim, double k0) {
        Permeability k;
        k.dim_ = dim;
        k.repr_ = Uniform{k0 * Matrix::Identity(dim, dim)};
        return k;
    }

    static Permeability tensor(const Matrix& k0) {
        if (k0.rows() != k0.cols() || k0.rows() < 2 || k0.rows() > 3)
            throw ConfigError("permeability tensor must be 2x2 or 3x3");
        if (!k0.isApprox(k0.transpose(), 1e-12))
            throw ConfigError("permeability tensor must be symmetric");
        Permeability k;
        k.dim_ = static_cast<int>(k0.rows());
        k.repr_ = Uniform{k0};
        return k;
    }

    static Permeability layered(int dim, std::vector<double> breaks, std::vector<double> values) {
        if (values.size() != breaks.size() + 1)
            throw ConfigError("layered permeability needs one more value than interfaces");
        for (std::size_t i = 1; i < breaks.size(); ++i)
            if (!(breaks[i] > breaks[i - 1]))
                throw ConfigError("layer interfaces must be strictly increasing");
        for (double v : values)
            if (!(v > 0.0)) throw ConfigError("layer permeabilities must be positive");
        Permeability k;
        k.dim_ = dim;
        k.repr_ = Layered{std::move(breaks), std::move(values)};
        return k;
    }

    int dim() const { return dim_; }
    bool is_layered() const { return std::holds_alternative<Layered>(repr_); }
    const std::variant<Uniform, Layered>& repr() const { return repr_; }

    /// True when K0(x) = k(x) I at every point.
    bool isotropic() const {
        if (is_layered()) return true;
        const Matrix& t = std::get<Uniform>(repr_).tensor;
        return t.isApprox(t(0, 0) * Matrix::Identity(dim_, dim_), 0.0);
    }

    /// Index of the layer containing height y.
    std::size_t layer_index(double y) const {
        const auto& lay = std::get<Layered>(repr_);
        return static_cast<std::size_t>(
            std::upper_bound(lay.breaks.begin(), lay.breaks.end(), y) - lay.breaks.begin());
    }

    /// Scalar k(x) for isotropic media.
    double scalar_at(const Point& x) const {
        if (auto* lay = std::get_if<Layered>(&repr_)) return lay->values[layer_index(x(1))];
        return std::get<Uniform>(repr_).tensor(0, 0);
    }

    Matrix at(const Point& x) const {
        if (is_layered()) return scalar_at(x) * Matrix::Identity(dim_, dim_);
        return std::get<Uniform>(repr_).tensor;
    }

    /// Every distinct tensor the field can take (one per region).
    std::vector<Matrix> regions() const {
        if (auto* lay = std::get_if<Layered>(&repr_)) {
            std::vector<Matrix> out;
            for (double v : lay->values) out.push_back(v * Matrix::Identity(dim_, dim_));
            return out;
        }
        return {std::get<Uniform>(repr_).tensor};
    }

private:
    int dim_ = 2;
    std::variant<Uniform, Layered> repr_;
};

/// Lower admissibility threshold for absolute pressures.
struct PressureDatum {
    double p_min = 1e-8;
};

struct MaterialModel {
    Permeability k0;
    double beta = 0.0;
    double p_atm = 1.0;
    double mu = 1.0;
    double k_min = 1.0;
    double k_max = 1.0;
    PressureDatum datum;

    /// beta * p_atm, the scale of the logarithmic term.
    double slip_scale() const { return beta * p_atm; }

    /// Throws ConfigError when an invariant is violated.
    void validate() const {
        if (!(beta >= 0.0)) throw ConfigError("Klinkenberg beta must be >= 0");
        if (!(mu > 0.0)) throw ConfigError("viscosity mu must be > 0");
        if (!(p_atm > 0.0)) throw ConfigError("atmospheric pressure p_atm must be > 0");
        if (!(datum.p_min > 0.0)) throw ConfigError("p_min must be > 0");
        if (!(k_min > 0.0 && k_min <= k_max))
            throw ConfigError("ellipticity bounds require 0 < k_min <= k_max");
        for (const Matrix& k : k0.regions()) {
            if (!k.isApprox(k.transpose(), 1e-12)) throw ConfigError("K0 must be symmetric");
            Eigen::SelfAdjointEigenSolver<Matrix> eig(k, Eigen::EigenvaluesOnly);
            const double lo = eig.eigenvalues().minCoeff();
            const double hi = eig.eigenvalues().maxCoeff();
            const double tol = 1e-12 * std::max(1.0, k_max);
            if (lo < k_min - tol || hi > k_max + tol) {
                std::ostringstream os;
                os << "K0 eigenvalues [" << lo << ", " << hi << "] outside ellipticity bounds ["
                   << k_min << ", " << k_max << "]";
                throw ConfigError(os.str());
            }
        }
    }
};

namespace detail {

inline void require_admissible(const MaterialModel& m, double p, const char* what) {
    if (!(p >= m.datum.p_min) || !(p > 0.0)) {
        std::ostringstream os;
        os << what << " " << p << " is not an admissible absolute pressure (p_min = "
           << m.datum.p_min << ")";
        throw AdmissibilityError(os.str());
    }
}

}  // namespace detail

/// K_g(x, p) = K0(x) (1 + beta p_atm / p).
inline Matrix apparent_permeability(const MaterialModel& m, const Point& x, double p) {
    detail::require_admissible(m, p, "pressure");
    return m.k0.at(x) * (1.0 + m.slip_scale() / p);
}

/// Transformed pressure P = p + beta p_atm ln p.
inline double hopf_cole_forward(const MaterialModel& m, double p) {
    detail::require_admissible(m, p, "pressure");
    const double a = m.slip_scale();
    return a == 0.0 ? p : p + a * std::log(p);
}

/// Prescribed boundary pressure in transformed form.
inline double transform_boundary_pressure(const MaterialModel& m, double p_p) {
    detail::require_admissible(m, p_p, "prescribed pressure");
    return hopf_cole_forward(m, p_p);
}

/// Principal branch W0 of the Lambert-W function on [-1/e, inf).
/// Halley iteration from a piecewise initial guess.
inline double lambert_w0(double x) {
    constexpr double inv_e = 1.0 / std::numbers::e;
    if (std::isnan(x) || x < -inv_e) {
        std::ostringstream os;
        os << "lambert_w0: argument " << x << " below -1/e";
        throw DomainError(os.str());
    }
    if (x == 0.0) return 0.0;
    if (x == -inv_e) return -1.0;
    if (std::isinf(x)) return x;

    double w;
    if (x > std::numbers::e) {
        const double lx = std::log(x);
        w = lx - std::log(lx);
    } else if (x < -0.25) {
        // branch-point series in q = sqrt(2 (e x + 1))
        const double q = std::sqrt(std::max(0.0, 2.0 * (std::numbers::e * x + 1.0)));
        w = -1.0 + q - q * q / 3.0 + 11.0 / 72.0 * q * q * q;
    } else if (std::abs(x) < 0.25) {
        w = x * (1.0 - x);
    } else {
        w = std::log1p(x);
    }

    for (int it = 0; it < 50; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        const double wp1 = w + 1.0;
        if (wp1 == 0.0) break;
        const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if (denom == 0.0 || !std::isfinite(denom)) break;
        const double dw = f / denom;
        w -= dw;
        if (std::abs(dw) <= 1e-15 * (1.0 + std::abs(w))) break;
    }
    return std::max(w, -1.0);
}

namespace detail {

// Solves p + a ln p = P for p > 0 by Newton's method safeguarded with a bracket.
inline double invert_forward_newton(double a, double target) {
    // g(p) = p + a ln p - P is increasing and concave; bracket the root.
    double lo = std::numeric_limits<double>::min();
    double hi = std::max(1.0, target);
    while (hi + a * std::log(hi) < target) hi *= 2.0;
    double p = std::max(hi - a * std::log(hi), lo);
    if (!(p > lo && p < hi)) p = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double g = p + a * std::log(p) - target;
        if (g > 0.0) hi = p; else lo = p;
        const double step = g / (1.0 + a / p);
        double next = p - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - p) <= 4.0 * std::numeric_limits<double>::epsilon() * next) return next;
        p = next;
    }
    return p;
}

}  // namespace detail

/// Physical pressure from transformed pressure, p = a W0(exp(P / a) / a) with
/// a = beta p_atm. The Darcy limit a = 0 is the identity; when exp(P / a)
/// would overflow the forward map is inverted directly.
inline double hopf_cole_inverse(const MaterialModel& m, double P) {
    const double a = m.slip_scale();
    if (a == 0.0) {
        if (!(P > 0.0)) {
            std::ostringstream os;
            os << "transformed pressure " << P << " has no positive preimage for beta = 0";
            throw DomainError(os.str());
        }
        return P;
    }
    if (!std::isfinite(P)) throw DomainError("transformed pressure is not finite");
    const double y = P / a;
    const double log_arg = y - std::log(a);
    // outside the comfortable exponent range of exp
    if (log_arg > 700.0 || log_arg < -700.0) return detail::invert_forward_newton(a, P);
    return a * lambert_w0(std::exp(log_arg));
}

}  // namespace deepls
