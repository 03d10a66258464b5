// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

// Scalar refractive index by 1-D nonlinear least squares over the
// cue-weighted DoP residuals of both reflection models.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sfp/error.hpp"
#include "sfp/fresnel.hpp"
#include "sfp/parallel.hpp"
#include "sfp/separation.hpp"

namespace sfp {

struct EtaBracket {
    double lo = 1.1;
    double hi = 2.0;
};

struct EtaEstimate {
    double eta_opt = 1.5;
    double residual = 0.0;
    EtaBracket bracket;
    std::size_t n_pixels = 0;
};

/// Pixels usable for estimation: valid and not amplitude-clamped.
inline Mask usable_pixels(const TRSMap& trs) {
    Mask m(trs.width(), trs.height());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = trs.valid[i] && !trs.clamped[i];
    return m;
}

class EtaObjective {
  public:
    EtaObjective(const Plane& zenith, const MixedComponents& mc, const ReflectanceCues& cues, const Mask& usable) {
        require_same_shape(zenith, mc.A_d, "estimate_eta");
        require_same_shape(zenith, cues.alpha_d, "estimate_eta");
        require_same_shape(zenith, usable, "estimate_eta");
        for (std::size_t i = 0; i < zenith.size(); ++i) {
            if (!usable[i] || !mc.valid[i] || !std::isfinite(zenith[i])) continue;
            const double theta = std::clamp(zenith[i], 0.0, kMaxZenith);
            samples_.push_back({std::cos(theta), cues.alpha_d[i], cues.alpha_s[i], mc.rho_d[i], mc.rho_s[i]});
        }
    }

    [[nodiscard]] std::size_t size() const { return samples_.size(); }

    double operator()(double eta) const {
        const int chunks = static_cast<int>((samples_.size() + kChunk - 1) / kChunk);
        return parallel_row_sum(chunks, [&](int chunk) {
            const std::size_t begin = static_cast<std::size_t>(chunk) * kChunk;
            const std::size_t end = std::min(samples_.size(), begin + kChunk);
            double sum = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                const auto& s = samples_[i];
                const double rd = s.alpha_d * (s.rho_d - dop_diffuse_cos(s.c, eta));
                const double rs = s.alpha_s * (s.rho_s - dop_specular_cos(s.c, eta));
                sum += rd * rd + rs * rs;
            }
            return sum;
        });
    }

  private:
    static constexpr std::size_t kChunk = 4096;
    struct Sample {
        double c, alpha_d, alpha_s, rho_d, rho_s;
    };
    std::vector<Sample> samples_;
};

/// Coarse grid (step 0.01) over the bracket, then golden-section
/// refinement around the best grid point to |d eta| < 1e-4.
inline EtaEstimate estimate_eta(const Plane& zenith, const MixedComponents& mc, const ReflectanceCues& cues,
                                const Mask& usable, EtaBracket bracket = {}) {
    if (!(bracket.lo > 1.0 && bracket.hi <= 3.0 && bracket.lo < bracket.hi)) {
        throw ConfigError("estimate_eta: bracket must satisfy 1 < lo < hi <= 3");
    }
    const EtaObjective objective(zenith, mc, cues, usable);
    if (objective.size() == 0) throw NumericalError("estimate_eta: no usable pixels");

    constexpr double kStep = 0.01;
    double best_eta = bracket.lo;
    double best_value = objective(bracket.lo);
    const int steps = static_cast<int>(std::floor((bracket.hi - bracket.lo) / kStep + 1e-9));
    for (int k = 1; k <= steps + 1; ++k) {
        const double eta = std::min(bracket.hi, bracket.lo + k * kStep);
        const double v = objective(eta);
        if (v < best_value) {
            best_value = v;
            best_eta = eta;
        }
        if (eta >= bracket.hi) break;
    }

    constexpr double kInvPhi = 0.6180339887498949;
    double a = std::max(bracket.lo, best_eta - kStep);
    double b = std::min(bracket.hi, best_eta + kStep);
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = objective(x1);
    double f2 = objective(x2);
    while (b - a > 1e-5) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = objective(x2);
        }
    }
    const double refined = 0.5 * (a + b);
    const double refined_value = objective(refined);
    if (refined_value < best_value) {
        best_value = refined_value;
        best_eta = refined;
    }
    return {best_eta, best_value, bracket, objective.size()};
}

inline Plane zenith_plane(const NormalMap& normals) {
    Plane out(normals.width(), normals.height());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = zenith_of(normals.n[i]);
    return out;
}

}  // namespace sfp
