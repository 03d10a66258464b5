// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

// Diffuse/specular decomposition of the fitted sinusoid by alternating
// least squares on A_m = A_d + A_s and +-B_m = B_d - B_s.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sfp/error.hpp"
#include "sfp/fresnel.hpp"
#include "sfp/image.hpp"
#include "sfp/parallel.hpp"
#include "sfp/pol_core.hpp"

namespace sfp {

struct SeparationConfig {
    double rho_d_init = dop_diffuse(deg2rad(45.0), 1.5);
    double rho_s_init = dop_specular(deg2rad(30.0), 1.5);
    double tol = 1e-8;  // relative objective decrease
    int max_iters = 50;
};

struct MixedComponents {
    Plane A_d, A_s;
    Plane B_d, B_s;
    Plane rho_d, rho_s;
    Plane phi_d, phi_s;
    Image<std::int8_t> sign_m;  // B_d - B_s = sign_m * B_m
    Mask valid;

    bool converged = false;
    int iterations = 0;
    std::vector<double> objective_trace;  // entry 0 is the initial state

    [[nodiscard]] int width() const { return A_d.width(); }
    [[nodiscard]] int height() const { return A_d.height(); }
};

struct ReflectanceCues {
    Plane alpha_d;
    Plane alpha_s;

    [[nodiscard]] int width() const { return alpha_d.width(); }
    [[nodiscard]] int height() const { return alpha_d.height(); }
};

inline double specular_phase(double phi_d) { return wrap_pi(phi_d + 0.5 * kPi); }

inline Plane specular_phase(const Plane& phi_d) {
    Plane out(phi_d.width(), phi_d.height());
    for (std::size_t i = 0; i < phi_d.size(); ++i) out[i] = specular_phase(phi_d[i]);
    return out;
}

namespace detail {

struct PixelComponents {
    double A_d = 0.0, A_s = 0.0;
    double B_d = 0.0, B_s = 0.0;
    double rho_d = 0.0, rho_s = 0.0;
    int sign = 1;
};

inline double separation_residual(double A_m, double B_m, const PixelComponents& p) {
    const double r1 = A_m - (p.A_d + p.A_s);
    const double r2 = p.sign * B_m - (p.rho_d * p.A_d - p.rho_s * p.A_s);
    return r1 * r1 + r2 * r2;
}

/// One ALS sweep for a fixed sign: DC split with the current DoPs, then
/// the minimal-norm non-negative amplitude split and the DoP update.
inline PixelComponents separation_step(double A_m, double B_m, double rho_d, double rho_s, int sign) {
    PixelComponents p;
    p.sign = sign;
    const double det = rho_d + rho_s;
    if (det < 1e-12) {
        p.A_d = A_m;
        p.A_s = 0.0;
    } else {
        p.A_d = (rho_s * A_m + sign * B_m) / det;
        p.A_s = A_m - p.A_d;
        if (p.A_d < 0.0) {
            p.A_d = 0.0;
            p.A_s = A_m;
        } else if (p.A_s < 0.0) {
            p.A_s = 0.0;
            p.A_d = A_m;
        }
    }
    const double target = sign * B_m;
    p.B_d = target >= 0.0 ? target : 0.0;
    p.B_s = target >= 0.0 ? 0.0 : -target;
    p.B_d = std::min(p.B_d, p.A_d);
    p.B_s = std::min(p.B_s, p.A_s);
    p.rho_d = p.A_d > 0.0 ? p.B_d / p.A_d : 0.0;
    p.rho_s = p.A_s > 0.0 ? p.B_s / p.A_s : 0.0;
    return p;
}

/// Sign choice by the residual after the full sweep; ties go to +1.
inline PixelComponents separation_update(double A_m, double B_m, double rho_d, double rho_s) {
    const PixelComponents plus = separation_step(A_m, B_m, rho_d, rho_s, +1);
    const PixelComponents minus = separation_step(A_m, B_m, rho_d, rho_s, -1);
    const double rp = separation_residual(A_m, B_m, plus);
    const double rm = separation_residual(A_m, B_m, minus);
    const double tie = 1e-14 * (A_m * A_m + B_m * B_m);
    return rm < rp - tie ? minus : plus;
}

}  // namespace detail

inline MixedComponents separate(const TRSMap& trs, const SeparationConfig& config = {}) {
    if (!trs.A.same_shape(trs.B) || !trs.A.same_shape(trs.phi) || !trs.A.same_shape(trs.valid)) {
        throw InputError("separate: inconsistent TRS planes");
    }
    if (config.max_iters < 1) throw ConfigError("separate: max_iters must be >= 1");
    if (config.rho_d_init < 0.0 || config.rho_s_init < 0.0) throw ConfigError("separate: initial DoPs must be >= 0");
    const int w = trs.width();
    const int h = trs.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!trs.valid(x, y)) continue;
            const double a = trs.A(x, y), b = trs.B(x, y);
            if (!std::isfinite(a) || !std::isfinite(b) || b < 0.0 || b > a * (1.0 + 1e-12)) {
                throw InputError("separate: TRS violates 0 <= B <= A");
            }
        }
    }

    MixedComponents mc{Plane(w, h), Plane(w, h), Plane(w, h), Plane(w, h), Plane(w, h), Plane(w, h),
                       Plane(w, h), Plane(w, h), Image<std::int8_t>(w, h, 1), trs.valid, false, 0, {}};
    std::vector<detail::PixelComponents> state(static_cast<std::size_t>(w) * h);

    auto row_objective = [&](int y) {
        double sum = 0.0;
        for (int x = 0; x < w; ++x) {
            if (!trs.valid(x, y)) continue;
            sum += detail::separation_residual(trs.A(x, y), trs.B(x, y), state[trs.A.index(x, y)]);
        }
        return sum;
    };

    parallel_rows(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            auto& p = state[trs.A.index(x, y)];
            const double a = trs.A(x, y);
            if (!trs.valid(x, y)) {
                p.A_d = a;
                continue;
            }
            p.A_d = 0.5 * a;
            p.A_s = 0.5 * a;
            p.rho_d = config.rho_d_init;
            p.rho_s = config.rho_s_init;
            p.B_d = p.rho_d * p.A_d;
            p.B_s = p.rho_s * p.A_s;
        }
    });
    double previous = parallel_row_sum(h, row_objective);
    mc.objective_trace.push_back(previous);

    for (int it = 1; it <= config.max_iters; ++it) {
        parallel_rows(h, [&](int y) {
            for (int x = 0; x < w; ++x) {
                if (!trs.valid(x, y)) continue;
                auto& p = state[trs.A.index(x, y)];
                p = detail::separation_update(trs.A(x, y), trs.B(x, y), p.rho_d, p.rho_s);
            }
        });
        const double current = parallel_row_sum(h, row_objective);
        mc.objective_trace.push_back(current);
        mc.iterations = it;
        if (previous - current <= config.tol * previous) {
            mc.converged = true;
            break;
        }
        previous = current;
    }

    parallel_rows(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const auto& p = state[trs.A.index(x, y)];
            mc.A_d(x, y) = p.A_d;
            mc.A_s(x, y) = p.A_s;
            mc.B_d(x, y) = p.B_d;
            mc.B_s(x, y) = p.B_s;
            mc.rho_d(x, y) = p.rho_d;
            mc.rho_s(x, y) = p.rho_s;
            mc.sign_m(x, y) = static_cast<std::int8_t>(p.sign);
            const double phi = trs.phi(x, y);
            mc.phi_d(x, y) = p.sign > 0 ? phi : wrap_pi(phi + 0.5 * kPi);
            mc.phi_s(x, y) = specular_phase(mc.phi_d(x, y));
        }
    });
    return mc;
}

/// alpha_d = A_d / A_m and alpha_s = A_s / A_m; pixels below the floor
/// (or invalid) count as fully diffuse.
inline ReflectanceCues reflectance_cues(const MixedComponents& mc, const TRSMap& trs,
                                        double a_floor = kDefaultAFloor) {
    require_same_shape(mc.A_d, trs.A, "reflectance_cues");
    const int w = trs.width();
    const int h = trs.height();
    ReflectanceCues cues{Plane(w, h, 1.0), Plane(w, h, 0.0)};
    parallel_rows(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const double a = trs.A(x, y);
            if (!trs.valid(x, y) || a < a_floor) continue;
            const double ad = std::clamp(mc.A_d(x, y) / a, 0.0, 1.0);
            cues.alpha_d(x, y) = ad;
            cues.alpha_s(x, y) = 1.0 - ad;
        }
    });
    return cues;
}

}  // namespace sfp
