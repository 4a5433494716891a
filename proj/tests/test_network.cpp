#include "checks.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace deepls;
using checks::small_config;

namespace {

Eigen::Map<Matrix> block(Vector& theta, const ShapeEntry& e) {
    return {theta.data() + e.offset, static_cast<Eigen::Index>(e.rows), static_cast<Eigen::Index>(e.cols)};
}

const ShapeEntry& entry(const Network& net, const std::string& head, int layer, ShapeEntry::Kind kind) {
    for (const auto& e : net.shape_map())
        if (e.head == head && e.layer == layer && e.kind == kind) return e;
    throw std::logic_error("no such block");
}

}  // namespace

TEST(FourierFeatures, IdentityWithoutFrequencies) {
    NetworkConfig c;
    const Point x{{0.3, -0.7}};
    EXPECT_TRUE(fourier_features(x, c).isApprox(x, 0.0));
}

TEST(FourierFeatures, LayoutAtOrigin) {
    NetworkConfig c;
    c.frequencies = {1.0, 2.0};
    const Vector phi = fourier_features(Point::Zero(2), c);
    ASSERT_EQ(phi.size(), 10);
    const Vector expect{{0, 0, 0, 0, 1, 1, 0, 0, 1, 1}};
    EXPECT_TRUE(phi.isApprox(expect, 0.0));
    const int nd = 3;
    c.dim = nd;
    EXPECT_EQ(c.input_size(), nd * (1 + 2 * 2));
}

TEST(FourierFeatures, DefaultFrequenciesScaleWithDiagonal) {
    const auto w = default_frequencies(4, 2.0);
    ASSERT_EQ(w.size(), 4u);
    for (std::size_t k = 0; k < w.size(); ++k) EXPECT_NEAR(w[k], (k + 1) * std::numbers::pi / 2.0, 1e-15);
    EXPECT_TRUE(default_frequencies(0, 2.0).empty());
}

TEST(Network, ParameterCount) {
    const Network net(small_config(2, 2, 4, 0, Activation::tanh, 0));
    // trunk 4*2+4 + 4*4+4, pressure head 4+1, velocity head 2*4+2
    EXPECT_EQ(net.parameter_count(), 47u);
    std::size_t total = 0;
    for (const auto& e : net.shape_map()) {
        EXPECT_EQ(e.offset, total);
        total += e.size();
    }
    EXPECT_EQ(total, 47u);
}

TEST(Network, InitialisationDeterministicWithZeroBiases) {
    const Network net(small_config(2, 3, 16, 2, Activation::tanh, 0));
    const ParameterVector a = net.init_parameters(42), b = net.init_parameters(42), c = net.init_parameters(43);
    EXPECT_TRUE(a.values.isApprox(b.values, 0.0));
    EXPECT_GT((a.values - c.values).norm(), 0.0);
    for (const auto& e : a.shape) {
        const auto seg = a.values.segment(static_cast<Eigen::Index>(e.offset), static_cast<Eigen::Index>(e.size()));
        if (e.kind == ShapeEntry::Kind::bias) {
            EXPECT_EQ(seg.cwiseAbs().maxCoeff(), 0.0);
        } else {
            const double lim = std::sqrt(6.0 / static_cast<double>(e.rows + e.cols));
            EXPECT_LE(seg.cwiseAbs().maxCoeff(), lim);
        }
    }
}

TEST(Network, ZeroWeightsReturnHeadBiases) {
    const Network net(small_config(2, 2, 5, 1, Activation::tanh, 0));
    Vector theta = Vector::Zero(static_cast<Eigen::Index>(net.parameter_count()));
    block(theta, entry(net, "pressure", 2, ShapeEntry::Kind::bias))(0, 0) = 1.5;
    block(theta, entry(net, "velocity", 2, ShapeEntry::Kind::bias)) = Matrix{{-0.25}, {2.0}};
    const FieldEval e = net.forward_with_spatial_derivs(theta, Point{{0.4, -0.9}});
    EXPECT_EQ(e.P, 1.5);
    EXPECT_EQ(e.u(0), -0.25);
    EXPECT_EQ(e.u(1), 2.0);
    EXPECT_EQ(e.grad_P.norm(), 0.0);
    EXPECT_EQ(e.div_u, 0.0);
}

TEST(Network, SingleTanhLayerByHand) {
    const Network net(small_config(2, 1, 1, 0, Activation::tanh, 0));
    Vector theta = Vector::Zero(static_cast<Eigen::Index>(net.parameter_count()));
    block(theta, entry(net, "trunk", 0, ShapeEntry::Kind::weight)) = Matrix{{0.5, -1.0}};
    block(theta, entry(net, "trunk", 0, ShapeEntry::Kind::bias))(0, 0) = 0.1;
    block(theta, entry(net, "pressure", 1, ShapeEntry::Kind::weight))(0, 0) = 2.0;
    block(theta, entry(net, "pressure", 1, ShapeEntry::Kind::bias))(0, 0) = -1.0;
    block(theta, entry(net, "velocity", 1, ShapeEntry::Kind::weight)) = Matrix{{3.0}, {-4.0}};
    const Point x{{0.2, 0.3}};
    const double z = 0.5 * 0.2 - 0.3 + 0.1, h = std::tanh(z), s = 1.0 - h * h;
    const FieldEval e = net.forward_with_spatial_derivs(theta, x);
    EXPECT_NEAR(e.P, 2.0 * h - 1.0, 1e-15);
    EXPECT_NEAR(e.u(0), 3.0 * h, 1e-15);
    EXPECT_NEAR(e.u(1), -4.0 * h, 1e-15);
    EXPECT_NEAR(e.grad_P(0), 2.0 * s * 0.5, 1e-15);
    EXPECT_NEAR(e.grad_P(1), 2.0 * s * -1.0, 1e-15);
    EXPECT_NEAR(e.div_u, 3.0 * s * 0.5 + -4.0 * s * -1.0, 1e-15);
}

TEST(Network, SpatialDerivativesMatchFiniteDifferences) {
    EXPECT_LE(checks::spatial_derivative_error(100, 11), 1e-6);
}

TEST(Network, ReluDerivativesAwayFromKinks) {
    const Network net(small_config(2, 2, 8, 0, Activation::relu, 3));
    const Vector theta = net.init_parameters(5).values;
    Rng rng(9);
    int checked = 0;
    for (int t = 0; t < 50; ++t) {
        const Point x{{rng.uniform(-1, 1), rng.uniform(-1, 1)}};
        const FieldEval e = net.forward_with_spatial_derivs(theta, x);
        const double h = 1e-7;
        Vector g(2);
        for (int a = 0; a < 2; ++a) {
            Point xp = x, xm = x;
            xp(a) += h;
            xm(a) -= h;
            g(a) = (net.forward(theta, xp).first - net.forward(theta, xm).first) / (2 * h);
        }
        // piecewise linear: a kink inside the stencil shows up as a mismatch
        if ((e.grad_P - g).norm() > 1e-6 * std::max(1.0, g.norm())) continue;
        ++checked;
    }
    EXPECT_GE(checked, 45);
}

TEST(Network, BatchedMatchesPointwise) {
    const Network net(small_config(3, 2, 7, 2, Activation::tanh, 1));
    const Vector theta = net.init_parameters(2).values;
    Matrix X = Matrix::Random(3, 9);
    const FieldBatch b = net.evaluate(theta, X, true);
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const FieldEval e = net.forward_with_spatial_derivs(theta, X.col(j));
        EXPECT_NEAR(b.P(j), e.P, 1e-14);
        EXPECT_LE((b.u.col(j) - e.u).norm(), 1e-14);
        EXPECT_LE((b.grad_P.col(j) - e.grad_P).norm(), 1e-14);
        EXPECT_NEAR(b.div_u(j), e.div_u, 1e-14);
    }
}

TEST(Network, ParameterGradientMatchesFiniteDifferences) {
    EXPECT_LE(checks::parameter_gradient_error(20, 5), 1e-5);
}

TEST(Network, ZeroWeightGradientOnlyInPressureBias) {
    // F = P at a single interior point, expressed as an adjoint pullback
    const Network net(small_config(2, 2, 4, 1, Activation::tanh, 0));
    const Vector theta = Vector::Zero(static_cast<Eigen::Index>(net.parameter_count()));
    const Point x{{0.3, 0.6}};
    Network::Tape tape;
    net.evaluate(theta, x, true, &tape);
    FieldAdjoints adj;
    adj.P = Vector::Ones(1);
    const Vector g = net.pullback(theta, tape, adj);
    const auto& pb = entry(net, "pressure", 2, ShapeEntry::Kind::bias);
    for (Eigen::Index i = 0; i < g.size(); ++i) EXPECT_EQ(g(i), i == static_cast<Eigen::Index>(pb.offset) ? 1.0 : 0.0);
}

TEST(Network, SharedTrunkCouplesHeads) {
    // a pure flux functional still moves the trunk parameters, which the pressure head also reads
    const Network net(small_config(2, 2, 6, 1, Activation::tanh, 0));
    const Vector theta = net.init_parameters(8).values;
    Network::Tape tape;
    net.evaluate(theta, Point{{0.1, 0.2}}, true, &tape);
    FieldAdjoints adj;
    adj.u = Matrix::Ones(2, 1);
    const Vector g = net.pullback(theta, tape, adj);
    const auto& t0 = entry(net, "trunk", 0, ShapeEntry::Kind::weight);
    const auto& ph = entry(net, "pressure", 2, ShapeEntry::Kind::weight);
    EXPECT_GT(g.segment(static_cast<Eigen::Index>(t0.offset), static_cast<Eigen::Index>(t0.size())).norm(), 0.0);
    EXPECT_EQ(g.segment(static_cast<Eigen::Index>(ph.offset), static_cast<Eigen::Index>(ph.size())).norm(), 0.0);
}

TEST(Network, ShapeMismatchRejected) {
    const Network net(small_config(2, 2, 4, 0, Activation::tanh, 0));
    EXPECT_THROW(net.forward(Vector::Zero(46), Point::Zero(2)), ConfigError);
    EXPECT_THROW(net.forward(Vector::Zero(47), Point::Zero(3)), ConfigError);
    NetworkConfig bad = small_config(2, 0, 4, 0, Activation::tanh, 0);
    EXPECT_THROW(Network{bad}, ConfigError);
}
