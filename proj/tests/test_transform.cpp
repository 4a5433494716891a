#include "deepls/transform.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace deepls;

namespace {

MaterialModel gas(double beta, double p_atm = 1.0) {
    MaterialModel m;
    m.k0 = Permeability::scalar(2, 1.0);
    m.beta = beta;
    m.p_atm = p_atm;
    return m;
}

}  // namespace

TEST(ApparentPermeability, DarcyLimitAndDoubling) {
    const Point x = Point::Zero(2);
    EXPECT_TRUE(apparent_permeability(gas(0.0), x, 3.7).isApprox(Matrix::Identity(2, 2), 0.0));
    EXPECT_TRUE(apparent_permeability(gas(1.0), x, 1.0).isApprox(2.0 * Matrix::Identity(2, 2), 0.0));
}

TEST(ApparentPermeability, ApproachesIntrinsicAtHighPressure) {
    const MaterialModel m = gas(5.0);
    for (double p : {1e2, 1e4, 1e6}) {
        const Matrix k = apparent_permeability(m, Point::Zero(2), p);
        EXPECT_NEAR(k(0, 0) - 1.0, 5.0 / p, 1e-15);
    }
}

TEST(ApparentPermeability, RejectsNonPositivePressure) {
    EXPECT_THROW(apparent_permeability(gas(1.0), Point::Zero(2), 0.0), AdmissibilityError);
    EXPECT_THROW(apparent_permeability(gas(1.0), Point::Zero(2), -1.0), AdmissibilityError);
}

TEST(MaterialModel, AcceptsTableOneBetaRanges) {
    for (double beta : {1.0, 10.0, 200.0}) EXPECT_NO_THROW(gas(beta).validate());
    EXPECT_THROW(gas(-0.1).validate(), ConfigError);
}

TEST(MaterialModel, EllipticityBoundsChecked) {
    MaterialModel m;
    Matrix k(2, 2);
    k << 2.0, 0.5, 0.5, 1.0;
    m.k0 = Permeability::tensor(k);
    m.k_min = 0.5;
    m.k_max = 3.0;
    EXPECT_NO_THROW(m.validate());
    m.k_min = 1.0;  // smallest eigenvalue is ~0.79
    EXPECT_THROW(m.validate(), ConfigError);
    Matrix asym(2, 2);
    asym << 1.0, 0.2, 0.0, 1.0;
    EXPECT_THROW(Permeability::tensor(asym), ConfigError);
}

TEST(HopfCole, ForwardExamples) {
    EXPECT_DOUBLE_EQ(hopf_cole_forward(gas(1.0), 1.0), 1.0);
    EXPECT_DOUBLE_EQ(hopf_cole_forward(gas(0.0), 7.3), 7.3);
    // ln 10 from the atanh series, independent of std::log
    const double oracle = 10.0 + oracle::ln_series(10.0);
    EXPECT_NEAR(oracle, 12.302585093, 1e-9);
    EXPECT_NEAR(hopf_cole_forward(gas(1.0), 10.0), oracle, 1e-12);
    EXPECT_NEAR(transform_boundary_pressure(gas(1.0), 10.0), oracle, 1e-12);
    EXPECT_DOUBLE_EQ(transform_boundary_pressure(gas(0.0), 3.0), 3.0);
    EXPECT_DOUBLE_EQ(transform_boundary_pressure(gas(1.0), 1.0), 1.0);
}

TEST(HopfCole, AdmissibilityErrors) {
    EXPECT_THROW(hopf_cole_forward(gas(1.0), 0.0), AdmissibilityError);
    EXPECT_THROW(transform_boundary_pressure(gas(1.0), -2.0), AdmissibilityError);
    MaterialModel m = gas(1.0);
    m.datum.p_min = 0.5;
    EXPECT_THROW(transform_boundary_pressure(m, 0.25), AdmissibilityError);
}

TEST(HopfCole, StrictlyMonotone) {
    for (double beta : {0.0, 0.1, 1.0, 10.0, 200.0}) {
        const MaterialModel m = gas(beta);
        double prev = hopf_cole_forward(m, 1e-6);
        for (double p = 2e-6; p < 1e4; p *= 1.37) {
            const double cur = hopf_cole_forward(m, p);
            EXPECT_GT(cur, prev) << "beta " << beta << " p " << p;
            prev = cur;
        }
    }
}

TEST(HopfCole, InverseExamples) {
    EXPECT_NEAR(hopf_cole_inverse(gas(1.0), 1.0), 1.0, 1e-14);
    EXPECT_DOUBLE_EQ(hopf_cole_inverse(gas(0.0), 5.0), 5.0);
    EXPECT_NEAR(hopf_cole_inverse(gas(1.0), 10.0 + oracle::ln_series(10.0)), 10.0, 1e-12);
}

TEST(HopfCole, RoundTripGrid) {
    for (double beta : {0.0, 0.1, 1.0, 10.0, 200.0})
        for (int e = -3; e <= 3; ++e) {
            const double p = std::pow(10.0, e);
            const MaterialModel m = gas(beta);
            EXPECT_LE(std::abs(hopf_cole_inverse(m, hopf_cole_forward(m, p)) - p) / p, 1e-10)
                << "beta " << beta << " p " << p;
        }
}

TEST(HopfCole, OverflowRegimeUsesForwardNewton) {
    // P / (beta p_atm) far beyond the exp range
    const MaterialModel m = gas(1e-6);
    for (double p : {1e-3, 0.5, 30.0, 1e3}) {
        const double P = hopf_cole_forward(m, p);
        EXPECT_LE(std::abs(hopf_cole_inverse(m, P) - p) / p, 1e-12) << p;
    }
    const MaterialModel tiny_atm = gas(1.0, 1e-5);
    EXPECT_NEAR(hopf_cole_inverse(tiny_atm, hopf_cole_forward(tiny_atm, 42.0)), 42.0, 1e-10);
}

TEST(HopfCole, DarcyInverseRejectsNonPositive) {
    EXPECT_THROW(hopf_cole_inverse(gas(0.0), -1.0), DomainError);
}

TEST(LambertW, Examples) {
    EXPECT_EQ(lambert_w0(0.0), 0.0);
    EXPECT_NEAR(lambert_w0(std::numbers::e), 1.0, 1e-15);
    const double w1 = oracle::bisect([](double w) { return w * std::exp(w) - 1.0; }, 0.0, 1.0, 1e-16);
    EXPECT_NEAR(w1, 0.5671432904, 1e-10);
    EXPECT_NEAR(lambert_w0(1.0), w1, 1e-12);
    EXPECT_NEAR(lambert_w0(-1.0 / std::numbers::e), -1.0, 1e-7);
}

TEST(LambertW, DefiningIdentityOnLogGrid) {
    const double lo = -1.0 / std::numbers::e + 1e-9;
    std::vector<double> xs;
    for (double t = 1e-9; t < 1.0 / std::numbers::e; t *= 1.5) xs.push_back(-1.0 / std::numbers::e + t);
    for (double x = 1e-12; x <= 1e6; x *= 1.3) xs.push_back(x);
    xs.push_back(lo);
    xs.push_back(1e6);
    for (double x : xs) {
        const double w = lambert_w0(x);
        EXPECT_GE(w, -1.0);
        EXPECT_LE(std::abs(w * std::exp(w) - x), 1e-12 * std::max(1.0, std::abs(x))) << "x = " << x;
    }
}

TEST(LambertW, DomainError) {
    EXPECT_THROW(lambert_w0(-1.0 / std::numbers::e - 1e-6), DomainError);
    EXPECT_THROW(lambert_w0(std::nan("")), DomainError);
}
