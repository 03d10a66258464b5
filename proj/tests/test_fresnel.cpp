// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

#include <gtest/gtest.h>

#include <cmath>

#include "sfp/fresnel.hpp"

namespace {

using sfp::deg2rad;
using sfp::kPi;

// Direct transcriptions of the textbook formulas in terms of theta, used
// as independent references for the cos-based implementation.
double diffuse_reference(double t, double n) {
    const double s = std::sin(t), c = std::cos(t);
    const double num = (n - 1 / n) * (n - 1 / n) * s * s;
    const double den = 2 + 2 * n * n - (n + 1 / n) * (n + 1 / n) * s * s + 4 * c * std::sqrt(n * n - s * s);
    return num / den;
}

double specular_reference(double t, double n) {
    const double s = std::sin(t);
    const double num = 2 * s * s * std::cos(t) * std::sqrt(n * n - s * s);
    const double den = n * n - s * s - n * n * s * s + 2 * s * s * s * s;
    return num / den;
}

TEST(DopDiffuse, ZeroAtNormalIncidence) {
    for (double eta : {1.1, 1.5, 2.9}) EXPECT_EQ(sfp::dop_diffuse(0.0, eta), 0.0);
}

TEST(DopDiffuse, KnownValue) { EXPECT_NEAR(sfp::dop_diffuse(deg2rad(45), 1.5), 0.04398, 5e-6); }

TEST(DopDiffuse, MatchesReferenceFormula) {
    for (double eta : {1.05, 1.3, 1.5, 2.0, 3.0})
        for (double deg = 1; deg < 90; deg += 1.7)
            EXPECT_NEAR(sfp::dop_diffuse(deg2rad(deg), eta), diffuse_reference(deg2rad(deg), eta), 1e-14);
}

TEST(DopDiffuse, IncreasesWithZenith) {
    EXPECT_GT(sfp::dop_diffuse(deg2rad(60), 1.5), sfp::dop_diffuse(deg2rad(45), 1.5));
    for (double eta : {1.01, 1.3, 1.5, 2.2, 3.0}) {
        double prev = -1.0;
        for (int i = 0; i < 1000; ++i) {
            const double v = sfp::dop_diffuse(i * sfp::kMaxZenith / 999, eta);
            EXPECT_GT(v, prev);
            prev = v;
        }
    }
}

TEST(DopDiffuse, DomainErrors) {
    EXPECT_THROW(sfp::dop_diffuse(-0.1, 1.5), sfp::DomainError);
    EXPECT_THROW(sfp::dop_diffuse(kPi / 2, 1.5), sfp::DomainError);
    EXPECT_THROW(sfp::dop_diffuse(0.3, 1.0), sfp::DomainError);
    EXPECT_THROW(sfp::dop_diffuse(0.3, 3.1), sfp::DomainError);
    EXPECT_THROW(sfp::dop_diffuse(NAN, 1.5), sfp::ConfigError);
}

TEST(DopSpecular, VanishesTowardNormalIncidence) {
    EXPECT_EQ(sfp::dop_specular(0.0, 1.5), 0.0);
    EXPECT_LT(sfp::dop_specular(1e-4, 1.5), 1e-7);
}

TEST(DopSpecular, UnityAtBrewster) {
    for (double eta : {1.1, 1.3, 1.5, 1.8, 2.4}) EXPECT_NEAR(sfp::dop_specular(std::atan(eta), eta), 1.0, 1e-9);
    EXPECT_NEAR(sfp::brewster_angle(1.5), deg2rad(56.309932474020215), 1e-12);
}

TEST(DopSpecular, BelowUnityAwayFromBrewster) {
    EXPECT_LT(sfp::dop_specular(deg2rad(40), 1.5), 1.0);
    EXPECT_NEAR(sfp::dop_specular(deg2rad(30), 1.5), 0.391918, 1e-6);
}

TEST(DopSpecular, MatchesReferenceFormula) {
    for (double eta : {1.05, 1.3, 1.5, 2.0, 3.0})
        for (double deg = 1; deg < 89; deg += 1.3)
            EXPECT_NEAR(sfp::dop_specular(deg2rad(deg), eta), std::min(1.0, specular_reference(deg2rad(deg), eta)),
                        1e-12);
}

TEST(Kernels, DerivativesMatchFiniteDifferences) {
    for (double eta : {1.2, 1.5, 2.5}) {
        for (double c = 0.05; c < 1.0; c += 0.09) {
            const double h = 1e-6;
            const auto d = sfp::detail::diffuse_kernel(c, eta);
            const auto s = sfp::detail::specular_kernel(c, eta);
            const double fd_d = (sfp::detail::diffuse_kernel(c + h, eta).value - sfp::detail::diffuse_kernel(c - h, eta).value) / (2 * h);
            const double fd_s = (sfp::detail::specular_kernel(c + h, eta).value - sfp::detail::specular_kernel(c - h, eta).value) / (2 * h);
            EXPECT_NEAR(d.derivative, fd_d, 1e-6 * std::max(1.0, std::abs(fd_d)));
            EXPECT_NEAR(s.derivative, fd_s, 1e-6 * std::max(1.0, std::abs(fd_s)));
        }
    }
}

TEST(ZenithFromDopDiffuse, ZeroGivesZero) { EXPECT_EQ(sfp::zenith_from_dop_diffuse(0.0, 1.5).theta, 0.0); }

TEST(ZenithFromDopDiffuse, RoundTrip) {
    const auto z = sfp::zenith_from_dop_diffuse(sfp::dop_diffuse(deg2rad(45), 1.5), 1.5);
    EXPECT_NEAR(z.theta, deg2rad(45), 1e-6);
    EXPECT_FALSE(z.saturated);
}

TEST(ZenithFromDopDiffuse, SaturatesAboveModelMaximum) {
    const auto z = sfp::zenith_from_dop_diffuse(0.9, 1.5);
    EXPECT_TRUE(z.saturated);
    EXPECT_DOUBLE_EQ(z.theta, sfp::kMaxZenith);
}

TEST(ZenithFromDopSpecular, BrewsterForUnitDop) {
    const auto z = sfp::zenith_from_dop_specular(1.0, 1.5);
    EXPECT_NEAR(z.low, deg2rad(56.31), 1e-4);
    EXPECT_DOUBLE_EQ(z.low, z.high);
}

TEST(ZenithFromDopSpecular, LowBranchRoundTrip) {
    EXPECT_NEAR(sfp::zenith_from_dop_specular(sfp::dop_specular(deg2rad(30), 1.5), 1.5).low, deg2rad(30), 1e-6);
}

TEST(ZenithFromDopSpecular, BranchEndpointsForZero) {
    const auto z = sfp::zenith_from_dop_specular(0.0, 1.5);
    EXPECT_EQ(z.low, 0.0);
    EXPECT_DOUBLE_EQ(z.high, sfp::kMaxZenith);
}

TEST(ZenithFromDopSpecular, BothBranchesRoundTrip) {
    for (double eta : {1.2, 1.5, 2.0}) {
        const double b = sfp::brewster_angle(eta);
        for (double f = 0.05; f < 0.96; f += 0.1) {
            const double lo = f * b;
            const double hi = b + f * (sfp::kMaxZenith - b) * 0.98;
            EXPECT_NEAR(sfp::zenith_from_dop_specular(sfp::dop_specular(lo, eta), eta).low, lo, 1e-6);
            EXPECT_NEAR(sfp::zenith_from_dop_specular(sfp::dop_specular(hi, eta), eta).high, hi, 1e-6);
        }
    }
}

TEST(ZenithInverter, AgreesWithBisection) {
    for (double eta : {1.1, 1.5, 2.4, 3.0}) {
        const sfp::ZenithInverter inv(eta);
        for (int i = 0; i <= 400; ++i) {
            const double rho = i / 400.0;
            const auto a = inv.diffuse(0.45 * rho);
            const auto b = sfp::zenith_from_dop_diffuse(0.45 * rho, eta);
            EXPECT_NEAR(a.theta, b.theta, 2e-8);
            EXPECT_EQ(a.saturated, b.saturated);
            const auto c = inv.specular(rho);
            const auto d = sfp::zenith_from_dop_specular(rho, eta);
            EXPECT_NEAR(c.low, d.low, 2e-8);
            EXPECT_NEAR(c.high, d.high, 2e-8);
        }
    }
}

TEST(NormalFromAngles, UnitLengthAndUpperHemisphere) {
    for (double t = 0; t < sfp::kMaxZenith; t += 0.1)
        for (double a = -4; a < 4; a += 0.3) {
            const auto n = sfp::normal_from_angles(t, a);
            EXPECT_NEAR(sfp::norm(n), 1.0, 1e-15);
            EXPECT_GT(n.z, 0.0);
            EXPECT_NEAR(sfp::zenith_of(n), t, 1e-7);
        }
}

}  // namespace
