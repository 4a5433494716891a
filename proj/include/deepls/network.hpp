#pragma once

// Shared-trunk network for (P, u) with Fourier-feature lifting.
//
// Spatial derivatives are propagated forward as tangents alongside the
// values (one tangent channel per input coordinate). Parameter gradients are
// obtained by a reverse sweep over that augmented computation, so losses
// that contain grad P and div u are differentiated exactly.

#include "deepls/errors.hpp"
#include "deepls/geometry.hpp"
#include "deepls/types.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace deepls {

enum class Activation { tanh, relu };

inline std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

inline Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    throw ConfigError("unknown activation '" + s + "' (expected tanh or relu)");
}

/// omega_k = k pi / diag, k = 1..n_f.
inline std::vector<double> default_frequencies(int n_f, double diag) {
    std::vector<double> w;
    for (int k = 1; k <= n_f; ++k) w.push_back(k * std::numbers::pi / diag);
    return w;
}

struct NetworkConfig {
    int dim = 2;
    int depth = 4;   // hidden layers
    int width = 32;  // neurons per hidden layer
    std::vector<double> frequencies;
    Activation activation = Activation::tanh;
    std::uint64_t seed = 0;

    int n_features() const { return static_cast<int>(frequencies.size()); }
    int input_size() const { return dim * (1 + 2 * n_features()); }

    void validate() const {
        if (dim != 2 && dim != 3) throw ConfigError("network dimension must be 2 or 3");
        if (depth < 1) throw ConfigError("network depth must be >= 1");
        if (width < 1) throw ConfigError("network width must be >= 1");
        for (double w : frequencies)
            if (!(w > 0.0)) throw ConfigError("Fourier frequencies must be positive");
    }
};

/// Index range of one weight or bias block inside the flat parameter vector.
struct ShapeEntry {
    enum class Kind { weight, bias };
    std::string head;  // "trunk", "pressure" or "velocity"
    int layer = 0;
    Kind kind = Kind::weight;
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t size() const { return rows * cols; }
};

struct ParameterVector {
    Vector values;
    std::vector<ShapeEntry> shape;

    std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// Network outputs at one point.
struct FieldEval {
    double P = 0.0;
    Vector u;
    Vector grad_P;
    double div_u = 0.0;
};

/// Network outputs at many points (column j belongs to point j).
struct FieldBatch {
    Vector P;
    Matrix u;
    Matrix grad_P;
    Vector div_u;

    FieldEval at(Eigen::Index j) const {
        FieldEval e;
        e.P = P(j);
        e.u = u.col(j);
        if (grad_P.size()) e.grad_P = grad_P.col(j);
        if (div_u.size()) e.div_u = div_u(j);
        return e;
    }
};

/// Sensitivities of a scalar functional with respect to every FieldBatch
/// entry. Empty members are treated as zero.
struct FieldAdjoints {
    Vector P;
    Matrix u;
    Matrix grad_P;
    Vector div_u;
};

/// Componentwise [x, sin(w_1 x), cos(w_1 x), ..., sin(w_nf x), cos(w_nf x)].
inline Vector fourier_features(const Point& x, const NetworkConfig& cfg) {
    const int d = static_cast<int>(x.size());
    Vector phi(d * (1 + 2 * cfg.n_features()));
    phi.head(d) = x;
    for (int k = 0; k < cfg.n_features(); ++k) {
        const double w = cfg.frequencies[static_cast<std::size_t>(k)];
        phi.segment(d * (1 + 2 * k), d) = (w * x.array()).sin();
        phi.segment(d * (2 + 2 * k), d) = (w * x.array()).cos();
    }
    return phi;
}

class Network {
public:
    /// Intermediate values kept for the reverse sweep. Each matrix stacks the
    /// value block and the tangent blocks side by side (channels x points).
    struct Tape {
        std::vector<Matrix> inputs;  // input of each layer; back() is the trunk output
        std::vector<Matrix> pre;     // pre-activations of each hidden layer
        Eigen::Index n_points = 0;
        int channels = 1;
    };

    explicit Network(NetworkConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        build_shape();
    }

    const NetworkConfig& config() const { return cfg_; }
    std::size_t parameter_count() const { return count_; }
    const std::vector<ShapeEntry>& shape_map() const { return shape_; }

    /// Glorot-uniform weights, zero biases.
    ParameterVector init_parameters(std::uint64_t seed) const {
        ParameterVector p{Vector::Zero(static_cast<Eigen::Index>(count_)), shape_};
        Rng rng(seed);
        for (const auto& e : shape_) {
            if (e.kind != ShapeEntry::Kind::weight) continue;
            const double lim = std::sqrt(6.0 / static_cast<double>(e.rows + e.cols));
            for (std::size_t i = 0; i < e.size(); ++i)
                p.values(static_cast<Eigen::Index>(e.offset + i)) = rng.uniform(-lim, lim);
        }
        return p;
    }

    /// Evaluates the network at the columns of X. With spatial = true the
    /// result also carries grad P and div u.
    FieldBatch evaluate(const Vector& theta, const Matrix& X, bool spatial = true, Tape* tape = nullptr) const {
        check(theta, X);
        const Eigen::Index n = X.cols();
        const int nd = cfg_.dim;
        const int c = spatial ? nd + 1 : 1;

        Matrix a = lift(X, c);
        if (tape) {
            tape->inputs.clear();
            tape->pre.clear();
            tape->n_points = n;
            tape->channels = c;
        }
        for (int l = 0; l < cfg_.depth; ++l) {
            Matrix z = weight(theta, l) * a;
            z.leftCols(n).colwise() += bias(theta, l);
            Matrix next(z.rows(), z.cols());
            next.leftCols(n) = act(z.leftCols(n));
            if (c > 1) {
                const Matrix s1 = act_d1(z.leftCols(n));
                for (int k = 1; k < c; ++k) next.middleCols(k * n, n) = s1.cwiseProduct(z.middleCols(k * n, n));
            }
            if (tape) {
                tape->inputs.push_back(std::move(a));
                tape->pre.push_back(std::move(z));
            }
            a = std::move(next);
        }

        FieldBatch out;
        const Matrix hp = head_p_weight(theta) * a;
        const Matrix hu = head_u_weight(theta) * a;
        out.P = hp.leftCols(n).transpose();
        out.P.array() += head_p_bias(theta);
        out.u = hu.leftCols(n);
        out.u.colwise() += head_u_bias(theta);
        if (spatial) {
            out.grad_P.resize(nd, n);
            out.div_u = Vector::Zero(n);
            for (int k = 0; k < nd; ++k) {
                out.grad_P.row(k) = hp.middleCols((k + 1) * n, n);
                out.div_u += hu.row(k).segment((k + 1) * n, n).transpose();
            }
        }
        if (tape) tape->inputs.push_back(std::move(a));
        return out;
    }

    /// Gradient with respect to theta of a scalar functional F whose partial
    /// derivatives with respect to the evaluated fields are `adj`.
    Vector pullback(const Vector& theta, const Tape& tape, const FieldAdjoints& adj) const {
        const Eigen::Index n = tape.n_points;
        const int c = tape.channels;
        const int nd = cfg_.dim;
        const int m = cfg_.width;
        if (c == 1 && (adj.grad_P.size() || adj.div_u.size()))
            throw ConfigError("pullback: spatial adjoints need a tape recorded with spatial derivatives");

        Vector grad = Vector::Zero(static_cast<Eigen::Index>(count_));
        const Matrix& top = tape.inputs.back();

        // seeds for the two heads, laid out like the head outputs
        Matrix gp = Matrix::Zero(1, c * n);
        Matrix gu = Matrix::Zero(nd, c * n);
        if (adj.P.size()) gp.leftCols(n) = adj.P.transpose();
        if (adj.u.size()) gu.leftCols(n) = adj.u;
        for (int k = 0; k < c - 1; ++k) {
            if (adj.grad_P.size()) gp.middleCols((k + 1) * n, n) = adj.grad_P.row(k);
            if (adj.div_u.size()) gu.row(k).segment((k + 1) * n, n) = adj.div_u.transpose();
        }

        const auto& ep = shape_[shape_.size() - 4];
        const auto& ebp = shape_[shape_.size() - 3];
        const auto& eu = shape_[shape_.size() - 2];
        const auto& ebu = shape_[shape_.size() - 1];
        Eigen::Map<Matrix>(grad.data() + ep.offset, 1, m) = gp * top.transpose();
        grad(static_cast<Eigen::Index>(ebp.offset)) = gp.leftCols(n).sum();
        Eigen::Map<Matrix>(grad.data() + eu.offset, nd, m) = gu * top.transpose();
        Eigen::Map<Vector>(grad.data() + ebu.offset, nd) = gu.leftCols(n).rowwise().sum();

        Matrix abar = head_p_weight(theta).transpose() * gp + head_u_weight(theta).transpose() * gu;
        for (int l = cfg_.depth - 1; l >= 0; --l) {
            const Matrix& z = tape.pre[static_cast<std::size_t>(l)];
            const auto z0 = z.leftCols(n);
            Matrix zbar(z.rows(), z.cols());
            const Matrix s1 = act_d1(z0);
            zbar.leftCols(n) = abar.leftCols(n).cwiseProduct(s1);
            if (c > 1) {
                const Matrix s2 = act_d2(z0);
                for (int k = 1; k < c; ++k) {
                    zbar.leftCols(n) += abar.middleCols(k * n, n).cwiseProduct(s2).cwiseProduct(z.middleCols(k * n, n));
                    zbar.middleCols(k * n, n) = abar.middleCols(k * n, n).cwiseProduct(s1);
                }
            }
            const auto& ew = shape_[static_cast<std::size_t>(2 * l)];
            const auto& eb = shape_[static_cast<std::size_t>(2 * l + 1)];
            Eigen::Map<Matrix>(grad.data() + ew.offset, static_cast<Eigen::Index>(ew.rows),
                               static_cast<Eigen::Index>(ew.cols)) =
                zbar * tape.inputs[static_cast<std::size_t>(l)].transpose();
            Eigen::Map<Vector>(grad.data() + eb.offset, static_cast<Eigen::Index>(eb.rows)) =
                zbar.leftCols(n).rowwise().sum();
            if (l > 0) abar = weight(theta, l).transpose() * zbar;
        }
        return grad;
    }

    /// (P, u) at a single point.
    std::pair<double, Vector> forward(const Vector& theta, const Point& x) const {
        const FieldBatch b = evaluate(theta, x, false);
        return {b.P(0), b.u.col(0)};
    }

    FieldEval forward_with_spatial_derivs(const Vector& theta, const Point& x) const {
        return evaluate(theta, x, true).at(0);
    }

private:
    void build_shape() {
        std::size_t off = 0;
        auto add = [&](const char* head, int layer, ShapeEntry::Kind kind, std::size_t rows, std::size_t cols) {
            shape_.push_back({head, layer, kind, off, rows, cols});
            off += rows * cols;
        };
        const auto m = static_cast<std::size_t>(cfg_.width);
        std::size_t in = static_cast<std::size_t>(cfg_.input_size());
        for (int l = 0; l < cfg_.depth; ++l) {
            add("trunk", l, ShapeEntry::Kind::weight, m, in);
            add("trunk", l, ShapeEntry::Kind::bias, m, 1);
            in = m;
        }
        add("pressure", cfg_.depth, ShapeEntry::Kind::weight, 1, m);
        add("pressure", cfg_.depth, ShapeEntry::Kind::bias, 1, 1);
        add("velocity", cfg_.depth, ShapeEntry::Kind::weight, static_cast<std::size_t>(cfg_.dim), m);
        add("velocity", cfg_.depth, ShapeEntry::Kind::bias, static_cast<std::size_t>(cfg_.dim), 1);
        count_ = off;
    }

    void check(const Vector& theta, const Matrix& X) const {
        if (static_cast<std::size_t>(theta.size()) != count_)
            throw ConfigError("parameter vector length " + std::to_string(theta.size()) +
                              " does not match the network (" + std::to_string(count_) + ")");
        if (X.rows() != cfg_.dim) throw ConfigError("point dimension does not match the network");
    }

    using ConstMap = Eigen::Map<const Matrix>;
    using ConstVecMap = Eigen::Map<const Vector>;

    ConstMap block(const Vector& theta, const ShapeEntry& e) const {
        return ConstMap(theta.data() + e.offset, static_cast<Eigen::Index>(e.rows), static_cast<Eigen::Index>(e.cols));
    }
    ConstMap weight(const Vector& theta, int l) const { return block(theta, shape_[static_cast<std::size_t>(2 * l)]); }
    ConstVecMap bias(const Vector& theta, int l) const {
        const auto& e = shape_[static_cast<std::size_t>(2 * l + 1)];
        return ConstVecMap(theta.data() + e.offset, static_cast<Eigen::Index>(e.rows));
    }
    ConstMap head_p_weight(const Vector& theta) const { return block(theta, shape_[shape_.size() - 4]); }
    double head_p_bias(const Vector& theta) const { return theta(static_cast<Eigen::Index>(shape_[shape_.size() - 3].offset)); }
    ConstMap head_u_weight(const Vector& theta) const { return block(theta, shape_[shape_.size() - 2]); }
    ConstVecMap head_u_bias(const Vector& theta) const {
        const auto& e = shape_[shape_.size() - 1];
        return ConstVecMap(theta.data() + e.offset, static_cast<Eigen::Index>(e.rows));
    }

    // Lifted input with tangent blocks d(phi)/dx_k.
    Matrix lift(const Matrix& X, int c) const {
        const int nd = cfg_.dim;
        const Eigen::Index n = X.cols();
        Matrix a = Matrix::Zero(cfg_.input_size(), c * n);
        a.block(0, 0, nd, n) = X;
        for (int k = 0; k < c - 1; ++k) a.block(k, (k + 1) * n, 1, n).setOnes();
        for (int f = 0; f < cfg_.n_features(); ++f) {
            const double w = cfg_.frequencies[static_cast<std::size_t>(f)];
            const Matrix wx = w * X;
            const Matrix s = wx.array().sin().matrix();
            const Matrix co = wx.array().cos().matrix();
            const int rs = nd * (1 + 2 * f), rc = nd * (2 + 2 * f);
            a.block(rs, 0, nd, n) = s;
            a.block(rc, 0, nd, n) = co;
            for (int k = 0; k < c - 1; ++k) {
                a.block(rs + k, (k + 1) * n, 1, n) = w * co.row(k);
                a.block(rc + k, (k + 1) * n, 1, n) = -w * s.row(k);
            }
        }
        return a;
    }

    template <class M> Matrix act(const M& z) const {
        if (cfg_.activation == Activation::tanh) return z.array().tanh().matrix();
        return z.cwiseMax(0.0);
    }
    template <class M> Matrix act_d1(const M& z) const {
        if (cfg_.activation == Activation::tanh) {
            const auto t = z.array().tanh();
            return (1.0 - t * t).matrix();
        }
        return (z.array() > 0.0).template cast<double>().matrix();
    }
    template <class M> Matrix act_d2(const M& z) const {
        if (cfg_.activation == Activation::tanh) {
            const Eigen::ArrayXXd t = z.array().tanh();
            return (-2.0 * t * (1.0 - t * t)).matrix();
        }
        return Matrix::Zero(z.rows(), z.cols());
    }

    NetworkConfig cfg_;
    std::vector<ShapeEntry> shape_;
    std::size_t count_ = 0;
};

}  // namespace deepls
