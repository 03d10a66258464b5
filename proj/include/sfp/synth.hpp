// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

// Analytic scenes and a forward mixed-polarization renderer.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sfp/error.hpp"
#include "sfp/fresnel.hpp"
#include "sfp/image.hpp"
#include "sfp/parallel.hpp"
#include "sfp/pol_core.hpp"
#include "sfp/separation.hpp"
#include "sfp/shape_opt.hpp"

namespace sfp {

enum class Preset { sphere, plane, sinusoid, gaussian_bump };

inline std::string preset_name(Preset p) {
    switch (p) {
        case Preset::sphere: return "sphere";
        case Preset::plane: return "plane";
        case Preset::sinusoid: return "sinusoid";
        case Preset::gaussian_bump: return "gaussian_bump";
    }
    return "unknown";
}

inline Preset parse_preset(const std::string& name) {
    if (name == "sphere") return Preset::sphere;
    if (name == "plane") return Preset::plane;
    if (name == "sinusoid") return Preset::sinusoid;
    if (name == "gaussian_bump" || name == "gaussian-bump") return Preset::gaussian_bump;
    throw ConfigError("unknown scene preset '" + name + "'");
}

struct SceneConfig {
    Preset preset = Preset::sphere;
    int size = 128;
    double tilt = 0.0;  // radians, plane preset only
    double eta = 1.5;
    double alpha_d = 1.0;
    double intensity = 0.5;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> angles = PolarizationStack::canonical_angles();

    void validate() const {
        if (size < 8) throw ConfigError("scene: size must be >= 8");
        check_eta(eta);
        if (!(alpha_d >= 0.0 && alpha_d <= 1.0)) throw ConfigError("scene: alpha_d must lie in [0, 1]");
        if (!(intensity > 0.0 && intensity <= 1.0)) throw ConfigError("scene: intensity must lie in (0, 1]");
        if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("scene: noise_sigma must be >= 0");
        if (!(std::abs(tilt) < 0.5 * kPi)) throw ConfigError("scene: tilt must lie in (-pi/2, pi/2)");
    }
};

struct SceneBundle {
    SceneConfig config;
    DepthMap depth;
    NormalMap normals;
    double eta = 1.5;
    Plane alpha_d, alpha_s;
    Plane intensity;
    PolarizationStack stack;
    double noise_sigma = 0.0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Standard normal sample addressed by (seed, pixel, plane); independent
/// of evaluation order.
inline double counter_normal(std::uint64_t seed, std::uint64_t pixel, std::uint64_t plane) {
    const std::uint64_t key = splitmix64(splitmix64(seed) ^ (pixel * 0x100000001b3ULL + plane));
    const std::uint64_t a = splitmix64(key);
    const std::uint64_t b = splitmix64(key ^ 0xd1b54a32d192ed03ULL);
    const double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

inline Plane scene_depth(const SceneConfig& cfg) {
    const int n = cfg.size;
    const double c = 0.5 * (n - 1);
    Plane z(n, n);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double dx = x - c, dy = y - c;
            double v = 0.0;
            switch (cfg.preset) {
                case Preset::sphere: {
                    const double r = 0.4 * n;
                    v = std::sqrt(std::max(r * r - dx * dx - dy * dy, 0.0));
                    break;
                }
                case Preset::plane: v = std::tan(cfg.tilt) * dx; break;
                case Preset::sinusoid: {
                    const double period = 0.5 * n;
                    v = 0.05 * n * std::sin(2.0 * kPi * x / period) * std::cos(2.0 * kPi * y / period);
                    break;
                }
                case Preset::gaussian_bump: {
                    const double s = n / 6.0;
                    v = 0.3 * n * std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
                    break;
                }
            }
            z(x, y) = v;
        }
    }
    return z;
}

}  // namespace detail

/// Forward model: per pixel A_d = alpha_d A, A_s = (1 - alpha_d) A,
/// I = A + (rho_d A_d - rho_s A_s) cos(2 a_pol - 2 azimuth), plus optional
/// Gaussian noise, clamped to [0, 1].
inline PolarizationStack render_polarization(const NormalMap& normals, double eta, const Plane& alpha_d,
                                             const Plane& intensity, const std::vector<double>& angles,
                                             double noise_sigma = 0.0, std::uint64_t seed = 0) {
    check_eta(eta);
    require_same_shape(normals.n, alpha_d, "render_polarization");
    require_same_shape(normals.n, intensity, "render_polarization");
    const int w = normals.width();
    const int h = normals.height();
    std::vector<Plane> planes(angles.size(), Plane(w, h));
    parallel_rows(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = alpha_d.index(x, y);
            const Vec3& n = normals.n[i];
            if (!(n.z > 0.0)) throw InputError("render_polarization: normals must satisfy n_z > 0");
            const double c = std::min(n.z, 1.0);
            const double A = intensity[i];
            const double Bm = dop_diffuse_cos(c, eta) * alpha_d[i] * A - dop_specular_cos(c, eta) * (1.0 - alpha_d[i]) * A;
            const double azimuth = std::atan2(n.y, n.x);
            for (std::size_t k = 0; k < angles.size(); ++k) {
                double v = A + Bm * std::cos(2.0 * angles[k] - 2.0 * azimuth);
                if (noise_sigma > 0.0) v += noise_sigma * detail::counter_normal(seed, i, k);
                planes[k][i] = std::clamp(v, 0.0, 1.0);
            }
        }
    });
    return PolarizationStack(angles, std::move(planes));
}

inline SceneBundle make_scene(const SceneConfig& config) {
    config.validate();
    SceneBundle b;
    b.config = config;
    b.depth = {detail::scene_depth(config)};
    b.normals = normals_from_depth(b.depth);
    b.eta = config.eta;
    b.alpha_d = Plane(config.size, config.size, config.alpha_d);
    b.alpha_s = Plane(config.size, config.size, 1.0 - config.alpha_d);
    b.intensity = Plane(config.size, config.size, config.intensity);
    b.noise_sigma = config.noise_sigma;
    b.stack = render_polarization(b.normals, b.eta, b.alpha_d, b.intensity, config.angles, config.noise_sigma,
                                  config.seed);
    return b;
}

/// The true decomposition and cues behind a bundle's noiseless render.
inline MixedComponents oracle_components(const SceneBundle& b) {
    const int w = b.normals.width();
    const int h = b.normals.height();
    MixedComponents mc{Plane(w, h), Plane(w, h), Plane(w, h), Plane(w, h), Plane(w, h), Plane(w, h),
                       Plane(w, h), Plane(w, h), Image<std::int8_t>(w, h, 1), Mask(w, h, 1), false, 0, {}};
    for (std::size_t i = 0; i < mc.A_d.size(); ++i) {
        const Vec3& n = b.normals.n[i];
        const double c = std::min(n.z, 1.0);
        mc.A_d[i] = b.alpha_d[i] * b.intensity[i];
        mc.A_s[i] = b.alpha_s[i] * b.intensity[i];
        mc.rho_d[i] = dop_diffuse_cos(c, b.eta);
        mc.rho_s[i] = dop_specular_cos(c, b.eta);
        mc.B_d[i] = mc.rho_d[i] * mc.A_d[i];
        mc.B_s[i] = mc.rho_s[i] * mc.A_s[i];
        mc.phi_d[i] = wrap_pi(std::atan2(n.y, n.x));
        mc.phi_s[i] = specular_phase(mc.phi_d[i]);
        mc.sign_m[i] = mc.B_d[i] - mc.B_s[i] >= 0.0 ? 1 : -1;
    }
    mc.converged = true;
    return mc;
}

inline ReflectanceCues oracle_cues(const SceneBundle& b) { return {b.alpha_d, b.alpha_s}; }

}  // namespace sfp
