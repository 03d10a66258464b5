// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "sfp/metrics.hpp"
#include "sfp/shape_opt.hpp"
#include "sfp/synth.hpp"

namespace {

using sfp::DepthMap;
using sfp::NormalMap;
using sfp::Plane;
using sfp::Vec3;

sfp::SceneBundle scene(sfp::Preset preset, int size, double alpha_d = 1.0, double eta = 1.5) {
    sfp::SceneConfig c;
    c.preset = preset;
    c.size = size;
    c.alpha_d = alpha_d;
    c.eta = eta;
    return sfp::make_scene(c);
}

/// Fitted TRS with the true components and cues.
sfp::Preprocessed oracle_pre(const sfp::SceneBundle& b) {
    return {sfp::fit_trs(b.stack), sfp::oracle_components(b), sfp::oracle_cues(b)};
}

TEST(NormalsFromDepth, ConstantDepthIsFrontal) {
    const auto n = sfp::normals_from_depth({Plane(5, 4, 3.0)});
    for (const auto& v : n.n.pixels()) EXPECT_EQ(v, (Vec3{0.0, 0.0, 1.0}));
}

TEST(NormalsFromDepth, LinearRamp) {
    Plane z(6, 5);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 6; ++x) z(x, y) = x;
    const auto n = sfp::normals_from_depth({z});
    for (const auto& v : n.n.pixels()) {
        EXPECT_NEAR(v.x, -1 / std::sqrt(2.0), 1e-15);
        EXPECT_NEAR(v.y, 0.0, 1e-15);
        EXPECT_NEAR(v.z, 1 / std::sqrt(2.0), 1e-15);
    }
}

TEST(NormalsFromDepth, SphereMatchesAnalyticNormals) {
    const int n = 128;
    const double c = 0.5 * (n - 1), R = 0.4 * n;
    const auto b = scene(sfp::Preset::sphere, n);
    NormalMap analytic = sfp::make_normal_map(n, n);
    sfp::Mask interior(n, n, 0);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double dx = x - c, dy = y - c, r = std::hypot(dx, dy);
            if (r > 0.9 * R) continue;
            analytic.n(x, y) = {dx / R, dy / R, std::sqrt(R * R - r * r) / R};
            interior(x, y) = 1;
        }
    }
    EXPECT_LT(sfp::mae_degrees(b.normals, analytic, interior), 0.5);
}

TEST(DepthGradient, AdjointIsTranspose) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (auto [w, h] : {std::pair{1, 1}, std::pair{2, 3}, std::pair{9, 7}}) {
        Plane z(w, h), gx(w, h), gy(w, h);
        for (auto& v : z.pixels()) v = g(rng);
        for (auto& v : gx.pixels()) v = g(rng);
        for (auto& v : gy.pixels()) v = g(rng);
        const auto d = sfp::depth_gradient(z);
        const auto t = sfp::depth_gradient_adjoint(gx, gy);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            lhs += d.zx[i] * gx[i] + d.zy[i] * gy[i];
            rhs += z[i] * t[i];
        }
        EXPECT_NEAR(lhs, rhs, 1e-12);
    }
}

TEST(IntegrateNormals, RecoversSmoothDepthUpToOffset) {
    const auto b = scene(sfp::Preset::gaussian_bump, 48);
    const auto z = sfp::integrate_normals(b.normals);
    const double offset = b.depth.z[0] - z.z[0];
    double worst = 0.0;
    for (std::size_t i = 0; i < z.z.size(); ++i) worst = std::max(worst, std::abs(z.z[i] + offset - b.depth.z[i]));
    EXPECT_LT(worst, 1e-6);
}

TEST(LossGeometric, CoupledFieldsGiveZero) {
    const auto b = scene(sfp::Preset::sinusoid, 32);
    EXPECT_NEAR(sfp::loss_geometric(b.normals, b.depth), 0.0, 1e-12);
}

TEST(LossGeometric, OrthogonalFieldGivesOne) {
    NormalMap n = sfp::make_normal_map(4, 4);
    for (auto& v : n.n.pixels()) v = {1.0, 0.0, 0.0};
    EXPECT_NEAR(sfp::loss_geometric(n, {Plane(4, 4)}), 1.0, 1e-15);
}

TEST(LossGeometric, FlatDepthMeasuresMeanZ) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    NormalMap n = sfp::make_normal_map(8, 8);
    double mean_z = 0.0;
    for (auto& v : n.n.pixels()) {
        v = {u(rng), u(rng), 0.1 + std::abs(u(rng))};
        const double len = sfp::norm(v);
        v = {v.x / len, v.y / len, v.z / len};
        mean_z += v.z;
    }
    mean_z /= 64;
    EXPECT_NEAR(sfp::loss_geometric(n, {Plane(8, 8)}), 1.0 - mean_z, 1e-14);
}

TEST(LossReconstruction, VanishesAtTruthForPureScenes) {
    for (double alpha_d : {1.0, 0.0}) {
        for (auto preset : {sfp::Preset::sphere, sfp::Preset::sinusoid, sfp::Preset::gaussian_bump}) {
            const auto b = scene(preset, 48, alpha_d, 1.4);
            const auto pre = oracle_pre(b);
            EXPECT_LT(sfp::loss_reconstruction(b.stack, pre.trs, b.normals, pre.mc, pre.cues, b.eta), 1e-10)
                << sfp::preset_name(preset) << " alpha_d=" << alpha_d;
        }
    }
}

TEST(LossReconstruction, FrontalNormalsLeaveUnmodulatedResidual) {
    sfp::SceneConfig c;
    c.preset = sfp::Preset::plane;
    c.size = 16;
    c.tilt = 0.6;
    const auto b = sfp::make_scene(c);
    const auto pre = oracle_pre(b);
    const NormalMap frontal = sfp::make_normal_map(16, 16);
    double expected = 0.0;
    for (std::size_t i = 0; i < pre.trs.A.size(); ++i) {
        for (std::size_t k = 0; k < b.stack.count(); ++k) {
            const double e = pre.trs.A[i] - b.stack.image(k)[i];
            expected += e * e;
        }
        expected += 2.5 * pre.trs.rho[i] * pre.trs.rho[i];
        expected += 2.5 * std::abs(sfp::wrapped_difference(0.0, pre.trs.phi[i]));
    }
    expected /= static_cast<double>(pre.trs.A.size());
    EXPECT_NEAR(sfp::loss_reconstruction(b.stack, pre.trs, frontal, pre.mc, pre.cues, 1.5), expected, 1e-12);
}

TEST(LossReconstruction, LinearInWeights) {
    const auto b = scene(sfp::Preset::sphere, 32);
    const auto pre = oracle_pre(b);
    NormalMap off = b.normals;
    for (auto& v : off.n.pixels()) v = sfp::normal_from_angles(0.3, 1.0);
    sfp::OptimConfig only_rho;
    only_rho.lambda1 = 0.0;
    only_rho.lambda3 = 0.0;
    sfp::OptimConfig base, doubled;
    doubled.lambda2 = 2 * base.lambda2;
    const double rho_term = sfp::loss_reconstruction(b.stack, pre.trs, off, pre.mc, pre.cues, 1.5, only_rho);
    const double l1 = sfp::loss_reconstruction(b.stack, pre.trs, off, pre.mc, pre.cues, 1.5, base);
    const double l2 = sfp::loss_reconstruction(b.stack, pre.trs, off, pre.mc, pre.cues, 1.5, doubled);
    EXPECT_GT(rho_term, 0.0);
    EXPECT_NEAR(l2 - l1, rho_term, 1e-12);
}

TEST(LossRatio, FlatDepthGivesZero) {
    const auto b = scene(sfp::Preset::sphere, 32, 0.7);
    const auto pre = oracle_pre(b);
    EXPECT_EQ(sfp::loss_ratio(b.stack, pre.trs, pre.mc, pre.cues, {Plane(32, 32)}), 0.0);
}

TEST(LossRatio, VanishesAtTruthForPureDiffuse) {
    for (auto preset : {sfp::Preset::sphere, sfp::Preset::sinusoid, sfp::Preset::gaussian_bump, sfp::Preset::plane}) {
        const auto b = scene(preset, 48);
        const auto pre = oracle_pre(b);
        EXPECT_LT(sfp::loss_ratio(b.stack, pre.trs, pre.mc, pre.cues, b.depth), 1e-6) << sfp::preset_name(preset);
    }
}

TEST(LossRatio, HomogeneousOfDegreeOne) {
    const auto b = scene(sfp::Preset::gaussian_bump, 32, 0.6);
    const auto pre = oracle_pre(b);
    DepthMap z = b.depth;
    for (auto& v : z.z.pixels()) v = 0.3 * v + 0.01 * std::sin(v);
    const double l = sfp::loss_ratio(b.stack, pre.trs, pre.mc, pre.cues, z);
    for (double c : {-2.0, 0.5, 3.0}) {
        DepthMap s = z;
        for (auto& v : s.z.pixels()) v *= c;
        EXPECT_NEAR(sfp::loss_ratio(b.stack, pre.trs, pre.mc, pre.cues, s), std::abs(c) * l, 1e-12);
    }
}

TEST(TotalLoss, ReducesToReconstructionWithoutCouplingTerms) {
    const auto b = scene(sfp::Preset::sphere, 32, 0.8);
    const auto pre = oracle_pre(b);
    sfp::OptimConfig c;
    c.lambda_geo = 0.0;
    c.lambda_ratio = 0.0;
    DepthMap z = b.depth;
    for (auto& v : z.z.pixels()) v *= 1.3;
    const auto t = sfp::total_loss(b.stack, pre.trs, pre.mc, pre.cues, b.normals, z, 1.5, c);
    EXPECT_DOUBLE_EQ(t.total, sfp::loss_reconstruction(b.stack, pre.trs, b.normals, pre.mc, pre.cues, 1.5, c));
}

TEST(TotalLoss, NearZeroAtTruthForPureScenes) {
    for (auto preset : {sfp::Preset::sphere, sfp::Preset::plane, sfp::Preset::sinusoid, sfp::Preset::gaussian_bump}) {
        const auto b = scene(preset, 48);
        const auto pre = oracle_pre(b);
        const auto t = sfp::total_loss(b.stack, pre.trs, pre.mc, pre.cues, b.normals, b.depth, b.eta);
        EXPECT_LT(t.total, 1e-6) << sfp::preset_name(preset);
    }
}

TEST(TotalLoss, AllZeroComponentsGiveZero) {
    const auto b = scene(sfp::Preset::plane, 16);
    const auto pre = oracle_pre(b);
    EXPECT_EQ(sfp::total_loss(b.stack, pre.trs, pre.mc, pre.cues, b.normals, b.depth, 1.5).total, 0.0);
}

/// Random 8x8 scene with random parameters; analytic vs central
/// differences of the full objective.
TEST(ShapeObjective, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Plane> planes(4, Plane(8, 8));
    for (std::size_t i = 0; i < 64; ++i) {
        const double A = 0.3 + 0.4 * u(rng), B = A * 0.6 * u(rng), phi = sfp::kPi * u(rng);
        for (std::size_t k = 0; k < 4; ++k) planes[k][i] = A + B * std::cos(2 * k * sfp::kPi / 4 - 2 * phi);
    }
    const sfp::PolarizationStack stack(sfp::PolarizationStack::canonical_angles(), planes);
    const auto pre = sfp::preprocess(stack);
    sfp::ReflectanceCues cues = pre.cues;
    for (std::size_t i = 0; i < 64; ++i) {
        cues.alpha_d[i] = 0.1 + 0.8 * u(rng);
        cues.alpha_s[i] = 1 - cues.alpha_d[i];
    }
    const sfp::ShapeObjective objective(stack, pre.trs, pre.mc, cues, sfp::OptimConfig{}, 1.45);

    for (int point = 0; point < 10; ++point) {
        sfp::ShapeParams s{Plane(8, 8), Plane(8, 8), Plane(8, 8)};
        for (std::size_t i = 0; i < 64; ++i) {
            s.p[i] = 2 * u(rng) - 1;
            s.q[i] = 2 * u(rng) - 1;
            s.z[i] = 4 * u(rng) - 2;
        }
        sfp::ShapeParams g;
        sfp::evaluate_params(objective, s, &g);
        double num = 0.0, den = 0.0;
        for (Plane sfp::ShapeParams::*field : {&sfp::ShapeParams::p, &sfp::ShapeParams::q, &sfp::ShapeParams::z}) {
            for (std::size_t i = 0; i < 64; ++i) {
                constexpr double h = 1e-5;
                sfp::ShapeParams plus = s, minus = s;
                (plus.*field)[i] += h;
                (minus.*field)[i] -= h;
                const double fd = (sfp::evaluate_params(objective, plus, nullptr).total -
                                   sfp::evaluate_params(objective, minus, nullptr).total) / (2 * h);
                const double an = (g.*field)[i];
                num += (an - fd) * (an - fd);
                den += fd * fd;
            }
        }
        EXPECT_LT(std::sqrt(num / den), 1e-4) << "point " << point;
    }
}

TEST(OptimizeShape, FrontalPlaneStaysFrontal) {
    const auto b = scene(sfp::Preset::plane, 32);
    sfp::OptimConfig c;
    c.iters = 300;
    const auto est = sfp::optimize_shape(b.stack, c);
    EXPECT_LT(sfp::mae_degrees(est.normals, b.normals, sfp::evaluation_mask(est.normals.valid)), 2.0);
}

TEST(OptimizeShape, DiffuseSphereConverges) {
    const auto b = scene(sfp::Preset::sphere, 64);
    const auto est = sfp::optimize_shape(b.stack);
    const auto mask = sfp::evaluation_mask(est.normals.valid);
    EXPECT_LT(sfp::mae_degrees(est.normals, b.normals, mask), 10.0);
    EXPECT_NEAR(est.eta.eta_opt, 1.5, 0.02);
    EXPECT_LT(sfp::loss_geometric(est.normals, est.depth), 0.01);
    ASSERT_EQ(est.loss_trace.size(), 2500u);
    for (const auto& t : est.loss_trace) ASSERT_TRUE(std::isfinite(t.total));
    // 100-iteration moving average is non-increasing after iteration 250.
    double prev = INFINITY;
    for (std::size_t end = 350; end <= est.loss_trace.size(); ++end) {
        double avg = 0.0;
        for (std::size_t t = end - 100; t < end; ++t) avg += est.loss_trace[t].total;
        avg /= 100;
        EXPECT_LE(avg, prev + 1e-15) << "window ending at " << end;
        prev = avg;
    }
    for (const auto& n : est.normals.n.pixels()) {
        EXPECT_NEAR(sfp::norm(n), 1.0, 1e-12);
        EXPECT_GT(n.z, 0.0);
    }
}

TEST(OptimizeShape, TruthIsNearOptimal) {
    const auto b = scene(sfp::Preset::gaussian_bump, 32);
    const auto pre = oracle_pre(b);
    sfp::OptimConfig c;
    c.iters = 300;
    c.outer_eta_rounds = 0;
    const auto gt_loss = sfp::total_loss(b.stack, pre.trs, pre.mc, pre.cues, b.normals, b.depth, b.eta, c).total;
    EXPECT_LT(gt_loss, 1e-6);
    const auto est = sfp::optimize_shape(b.stack, pre, sfp::params_from_shape(b.normals, b.depth), c);
    for (const auto& t : est.loss_trace) EXPECT_GE(t.total, gt_loss - 1e-6);
}

TEST(OptimizeShape, DivergenceIsReported) {
    const auto b = scene(sfp::Preset::sphere, 16);
    sfp::OptimConfig c;
    c.iters = 50;
    c.lr = 1e308;
    c.lr_decay = 1.0;
    EXPECT_THROW(sfp::optimize_shape(b.stack, c), sfp::NumericalError);
}

TEST(OptimConfig, Validation) {
    const auto b = scene(sfp::Preset::plane, 16);
    sfp::OptimConfig c;
    c.iters = 0;
    EXPECT_THROW(sfp::optimize_shape(b.stack, c), sfp::ConfigError);
    c = {};
    c.lambda2 = -1;
    EXPECT_THROW(sfp::optimize_shape(b.stack, c), sfp::ConfigError);
    c = {};
    c.eta_init = 0.9;
    EXPECT_THROW(sfp::optimize_shape(b.stack, c), sfp::ConfigError);
}

TEST(SelectConvexPrior, OrientsNormalsOutward) {
    const auto b = scene(sfp::Preset::sphere, 48);
    const auto pre = sfp::preprocess(b.stack);
    const auto priors = sfp::normal_priors(pre.trs, pre.cues, 1.5);
    const auto chosen = sfp::select_convex_prior(priors);
    EXPECT_LT(sfp::mae_degrees(chosen, b.normals, sfp::evaluation_mask(pre.trs.valid)), 1.0);
}

}  // namespace
