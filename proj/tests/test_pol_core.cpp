// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sfp/pol_core.hpp"

namespace {

using sfp::kPi;
using sfp::Plane;
using sfp::PolarizationStack;

PolarizationStack single_pixel(const std::vector<double>& values,
                               std::vector<double> angles = PolarizationStack::canonical_angles()) {
    std::vector<Plane> planes;
    for (double v : values) planes.emplace_back(1, 1, v);
    return PolarizationStack(std::move(angles), std::move(planes));
}

TEST(WrapPi, MapsIntoCanonicalRange) {
    EXPECT_DOUBLE_EQ(sfp::wrap_pi(0.0), 0.0);
    EXPECT_NEAR(sfp::wrap_pi(kPi + 0.25), 0.25, 1e-15);
    EXPECT_NEAR(sfp::wrap_pi(-0.25), kPi - 0.25, 1e-15);
    EXPECT_DOUBLE_EQ(sfp::wrap_pi(kPi), 0.0);
    for (double a = -20.0; a < 20.0; a += 0.37) {
        const double w = sfp::wrap_pi(a);
        EXPECT_GE(w, 0.0);
        EXPECT_LT(w, kPi);
    }
}

TEST(WrapPi, DifferenceIsPiPeriodic) {
    EXPECT_NEAR(sfp::wrapped_difference(0.1, 0.1 + kPi), 0.0, 1e-15);
    EXPECT_NEAR(sfp::wrapped_difference(3.0, 0.1), 3.0 - 0.1 - kPi, 1e-15);
    EXPECT_NEAR(std::abs(sfp::wrapped_difference(kPi / 2, 0.0)), kPi / 2, 1e-15);
}

TEST(PolarizationStack, RejectsTooFewAngles) {
    EXPECT_THROW(single_pixel({0.5, 0.5}, {0.0, 1.0}), sfp::ConfigError);
}

TEST(PolarizationStack, RejectsAnglesEqualModuloPi) {
    EXPECT_THROW(single_pixel({0.5, 0.5, 0.5}, {0.0, 0.5, kPi}), sfp::ConfigError);
}

TEST(PolarizationStack, RejectsNegativeOrNonFiniteIntensity) {
    EXPECT_THROW(single_pixel({0.5, -0.1, 0.5, 0.5}), sfp::InputError);
    EXPECT_THROW(single_pixel({0.5, NAN, 0.5, 0.5}), sfp::InputError);
    EXPECT_THROW(single_pixel({0.5, INFINITY, 0.5, 0.5}), sfp::InputError);
}

TEST(PolarizationStack, RejectsMismatchedPlanes) {
    std::vector<Plane> planes{Plane(2, 2), Plane(2, 2), Plane(3, 2)};
    EXPECT_THROW(PolarizationStack({0.0, 1.0, 2.0}, planes), sfp::InputError);
    EXPECT_THROW(PolarizationStack({0.0, 1.0}, {Plane(1, 1), Plane(1, 1), Plane(1, 1)}), sfp::InputError);
}

TEST(PolarizationStack, FindsAnglesModuloPi) {
    const auto s = single_pixel({0.5, 0.5, 0.5, 0.5});
    EXPECT_EQ(s.find_angle(kPi / 4), 1u);
    EXPECT_EQ(s.find_angle(kPi + kPi / 2), 2u);
    EXPECT_FALSE(s.find_angle(0.1).has_value());
}

TEST(FitTrs, ConstantSignalHasNoModulation) {
    const auto trs = sfp::fit_trs(single_pixel({0.5, 0.5, 0.5, 0.5}));
    EXPECT_DOUBLE_EQ(trs.A[0], 0.5);
    EXPECT_DOUBLE_EQ(trs.B[0], 0.0);
    EXPECT_DOUBLE_EQ(trs.phi[0], 0.0);
    EXPECT_DOUBLE_EQ(trs.rho[0], 0.0);
    EXPECT_TRUE(trs.valid[0]);
}

TEST(FitTrs, RecoversKnownSinusoid) {
    // I = 0.6 + 0.3 cos(2a - 2pi/3) at 0, 45, 90, 135 degrees.
    const auto trs = sfp::fit_trs(single_pixel({0.45, 0.6 + 0.15 * std::sqrt(3.0), 0.75, 0.6 - 0.15 * std::sqrt(3.0)}));
    EXPECT_NEAR(trs.A[0], 0.6, 1e-15);
    EXPECT_NEAR(trs.B[0], 0.3, 1e-15);
    EXPECT_NEAR(trs.phi[0], kPi / 3, 1e-14);
    EXPECT_NEAR(trs.rho[0], 0.5, 1e-14);
}

TEST(FitTrs, RoundedIntensitiesStillClose) {
    const auto trs = sfp::fit_trs(single_pixel({0.45, 0.8598, 0.75, 0.3402}));
    EXPECT_NEAR(trs.A[0], 0.6, 1e-12);
    EXPECT_NEAR(trs.B[0], 0.3, 1e-4);
    EXPECT_NEAR(trs.phi[0], kPi / 3, 1e-4);
}

TEST(FitTrs, DenseSweepMatchesExtrema) {
    std::vector<double> angles, values;
    for (int k = 0; k < 36; ++k) {
        const double a = k * kPi / 36;
        angles.push_back(a);
        values.push_back(0.6 + 0.3 * std::cos(2 * a - 2 * 1.1));
    }
    const auto trs = sfp::fit_trs(single_pixel(values, angles));
    EXPECT_NEAR(trs.A[0], 0.6, 1e-13);  // (I_max + I_min) / 2
    EXPECT_NEAR(trs.B[0], 0.3, 1e-13);  // (I_max - I_min) / 2
    EXPECT_NEAR(trs.rho[0], 0.5, 1e-13);
    EXPECT_NEAR(trs.phi[0], 1.1, 1e-13);
}

TEST(FitTrs, BelowFloorIsInvalidByConvention) {
    const auto trs = sfp::fit_trs(single_pixel({5e-5, 6e-5, 5e-5, 4e-5}));
    EXPECT_FALSE(trs.valid[0]);
    EXPECT_EQ(trs.phi[0], 0.0);
    EXPECT_EQ(trs.rho[0], 0.0);
}

TEST(FitTrs, ClampsAmplitudeAboveIntensity) {
    // Fitted B = 0.5 exceeds A = 0.25; clamp and flag.
    const auto trs = sfp::fit_trs(single_pixel({0.75, 0.25, 0.0, 0.0}));
    EXPECT_TRUE(trs.clamped[0]);
    EXPECT_DOUBLE_EQ(trs.B[0], trs.A[0]);
    EXPECT_DOUBLE_EQ(trs.rho[0], 1.0);
}

TEST(FitTrs, PhaseShiftByPiGivesSamePhase) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, kPi);
    for (int i = 0; i < 100; ++i) {
        const double phi = u(rng);
        std::vector<double> a, b;
        for (double ang : PolarizationStack::canonical_angles()) {
            a.push_back(0.5 + 0.2 * std::cos(2 * ang - 2 * phi));
            b.push_back(0.5 + 0.2 * std::cos(2 * ang - 2 * (phi + kPi)));
        }
        EXPECT_NEAR(sfp::fit_trs(single_pixel(a)).phi[0], sfp::fit_trs(single_pixel(b)).phi[0], 1e-12);
    }
}

TEST(FitTrs, ClosedFormMatchesGenericSolve) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Plane> planes(4, Plane(32, 32));
    for (auto& p : planes)
        for (auto& v : p.pixels()) v = u(rng);
    const PolarizationStack s(PolarizationStack::canonical_angles(), planes);
    const auto a = sfp::fit_trs(s, sfp::kDefaultAFloor, sfp::FitMethod::automatic);
    const auto b = sfp::fit_trs(s, sfp::kDefaultAFloor, sfp::FitMethod::generic);
    for (std::size_t i = 0; i < a.A.size(); ++i) {
        EXPECT_NEAR(a.A[i], b.A[i], 1e-12);
        EXPECT_NEAR(a.B[i], b.B[i], 1e-12);
        EXPECT_NEAR(std::abs(sfp::wrapped_difference(a.phi[i], b.phi[i])), 0.0, 1e-9);
    }
}

TEST(FitTrs, NoisyInterceptIsUnbiased) {
    constexpr int kSide = 128;
    constexpr double kSigma = 0.01;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, kSigma);
    std::vector<Plane> planes;
    for (double a : PolarizationStack::canonical_angles()) {
        Plane p(kSide, kSide);
        for (auto& v : p.pixels()) v = 0.5 + 0.2 * std::cos(2 * a - 1.0) + noise(rng);
        planes.push_back(std::move(p));
    }
    const auto trs = sfp::fit_trs(PolarizationStack(PolarizationStack::canonical_angles(), planes));
    double mean = 0.0;
    for (double v : trs.A.pixels()) mean += v - 0.5;
    mean /= trs.A.size();
    EXPECT_LT(std::abs(mean), 3 * kSigma / std::sqrt(double(trs.A.size())));
}

TEST(RenderTrs, ZeroAmplitudeIsFlat) {
    sfp::TRSMap trs{Plane(1, 1, 1.0), Plane(1, 1, 0.0), Plane(1, 1, 0.0), Plane(1, 1, 0.0), sfp::Mask(1, 1, 1),
                    sfp::Mask(1, 1, 0)};
    const auto s = sfp::render_trs(trs, PolarizationStack::canonical_angles());
    for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(s.image(k)[0], 1.0);
}

TEST(RenderTrs, KnownValues) {
    sfp::TRSMap trs{Plane(1, 1, 0.6), Plane(1, 1, 0.3), Plane(1, 1, kPi / 3), Plane(1, 1, 0.5), sfp::Mask(1, 1, 1),
                    sfp::Mask(1, 1, 0)};
    const auto s = sfp::render_trs(trs, PolarizationStack::canonical_angles());
    const double expected[] = {0.45, 0.8598, 0.75, 0.3402};
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(s.image(k)[0], expected[k], 1e-4);
}

TEST(RenderTrs, RoundTripIsExactForModelData) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    sfp::TRSMap trs{Plane(16, 16), Plane(16, 16), Plane(16, 16), Plane(16, 16), sfp::Mask(16, 16, 1),
                    sfp::Mask(16, 16, 0)};
    for (std::size_t i = 0; i < trs.A.size(); ++i) {
        trs.A[i] = 0.01 + 0.9 * u(rng);
        trs.B[i] = trs.A[i] * u(rng);
        trs.phi[i] = kPi * u(rng);
    }
    for (const auto& angles : {PolarizationStack::canonical_angles(), std::vector<double>{0.1, 0.9, 1.7, 2.2, 3.0}}) {
        const auto s = sfp::render_trs(trs, angles);
        const auto fit = sfp::fit_trs(s);
        const auto again = sfp::render_trs(fit, angles);
        for (std::size_t i = 0; i < trs.A.size(); ++i) {
            EXPECT_NEAR(fit.A[i], trs.A[i], 1e-12);
            EXPECT_NEAR(fit.B[i], trs.B[i], 1e-12);
            EXPECT_NEAR(fit.rho[i], trs.B[i] / trs.A[i], 1e-9);
            for (std::size_t k = 0; k < angles.size(); ++k) EXPECT_NEAR(again.image(k)[i], s.image(k)[i], 1e-12);
        }
    }
}

TEST(RenderTrs, InvalidPixelsRenderAsIntensity) {
    sfp::TRSMap trs{Plane(1, 1, 0.6), Plane(1, 1, 0.3), Plane(1, 1, 0.2), Plane(1, 1, 0.5), sfp::Mask(1, 1, 0),
                    sfp::Mask(1, 1, 0)};
    const auto s = sfp::render_trs(trs, PolarizationStack::canonical_angles());
    for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(s.image(k)[0], 0.6);
}

TEST(Demosaic, SingleCellLayout) {
    Plane m(2, 2);
    m(0, 0) = 0.1;
    m(1, 0) = 0.2;
    m(0, 1) = 0.3;
    m(1, 1) = 0.4;
    const auto s = sfp::demosaic(m);
    ASSERT_EQ(s.width(), 1);
    ASSERT_EQ(s.count(), 4u);
    EXPECT_DOUBLE_EQ(s.image(*s.find_angle(0.0))[0], 0.1);
    EXPECT_DOUBLE_EQ(s.image(*s.find_angle(kPi / 4))[0], 0.2);
    EXPECT_DOUBLE_EQ(s.image(*s.find_angle(kPi / 2))[0], 0.3);
    EXPECT_DOUBLE_EQ(s.image(*s.find_angle(3 * kPi / 4))[0], 0.4);
}

TEST(Demosaic, ConstantMosaic) {
    const auto s = sfp::demosaic(Plane(8, 6, 0.7));
    EXPECT_EQ(s.width(), 4);
    EXPECT_EQ(s.height(), 3);
    for (const auto& p : s.images())
        for (double v : p.pixels()) EXPECT_DOUBLE_EQ(v, 0.7);
}

TEST(Demosaic, OddDimensionsRejected) {
    EXPECT_THROW(sfp::demosaic(Plane(3, 2)), sfp::InputError);
    EXPECT_THROW(sfp::demosaic(Plane(2, 5)), sfp::InputError);
}

TEST(Demosaic, InterleaveRoundTrip) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Plane> planes(4, Plane(5, 7));
    for (auto& p : planes)
        for (auto& v : p.pixels()) v = u(rng);
    const PolarizationStack s(PolarizationStack::canonical_angles(), planes);
    const Plane m = sfp::interleave(s);
    EXPECT_EQ(m.width(), 10);
    EXPECT_EQ(m.height(), 14);
    EXPECT_EQ(sfp::demosaic(m), s);
}

}  // namespace
