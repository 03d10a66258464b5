// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

#pragma once

#include "sfp/metrics.hpp"
#include "sfp/pol_core.hpp"
#include "sfp/synth.hpp"

namespace sfp {

/// Scores an estimated normal field against ground truth. The DoP and
/// stack similarities compare the measured stack with a re-render of the
/// estimate under the measured intensity and the given diffuse fraction.
/// The AoP error covers masked pixels whose true normal is not frontal.
inline EvalReport evaluate(const NormalMap& est, double est_eta, const NormalMap& gt, const PolarizationStack& stack,
                           const Plane& alpha_d, const Mask& mask) {
    require_same_shape(est.n, gt.n, "evaluate");
    require_same_shape(est.n, stack.image(0), "evaluate");
    require_same_shape(est.n, alpha_d, "evaluate");
    require_same_shape(est.n, mask, "evaluate");
    EvalReport r;
    r.n_valid = count(mask);
    r.mae_deg = mae_degrees(est, gt, mask);
    // Azimuth is undefined for frontal ground-truth normals.
    Mask aop_mask = mask;
    for (std::size_t i = 0; i < aop_mask.size(); ++i) {
        const Vec3& n = gt.n[i];
        if (n.x * n.x + n.y * n.y < 1e-12) aop_mask[i] = 0;
    }
    r.aop_mae_deg = count(aop_mask) > 0 ? aop_mae(azimuth_plane(est), azimuth_plane(gt), aop_mask) : 0.0;

    const TRSMap measured = fit_trs(stack);
    NormalMap upper = est;
    for (auto& n : upper.n.pixels()) {
        if (!(n.z > 0.0)) n = Vec3{n.x, n.y, 1e-9};
    }
    const PolarizationStack rerender = render_polarization(upper, est_eta, alpha_d, measured.A, stack.angles());
    r.dop_ssim = ssim(fit_trs(rerender).rho, measured.rho);
    double s = 0.0;
    for (std::size_t k = 0; k < stack.count(); ++k) s += ssim(rerender.image(k), stack.image(k));
    r.stack_ssim = s / static_cast<double>(stack.count());
    return r;
}

}  // namespace sfp
