// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

#pragma once

#include <array>
#include <vector>

#include "sfp/fresnel.hpp"
#include "sfp/separation.hpp"

namespace sfp {

/// Physics-based normal candidates per pixel. Every pixel carries the
/// same number of candidates; candidate k at a pixel is the k-th entry of
/// that pixel's ordering (reflection type with the larger cue first).
/// Candidates 2k and 2k+1 always differ by pi in azimuth.
struct NormalPriorSet {
    std::vector<NormalMap> candidates;
    Mask diffuse_first;
    Mask saturated;  // diffuse zenith hit the grazing guard

    static constexpr std::size_t kCount = 6;
};

inline NormalPriorSet normal_priors(const TRSMap& trs, const ReflectanceCues& cues, double eta) {
    check_eta(eta);
    require_same_shape(trs.A, cues.alpha_d, "normal_priors");
    const int w = trs.width();
    const int h = trs.height();
    NormalPriorSet set;
    for (std::size_t k = 0; k < NormalPriorSet::kCount; ++k) {
        NormalMap m = make_normal_map(w, h);
        m.valid = trs.valid;
        set.candidates.push_back(std::move(m));
    }
    const ZenithInverter inverter(eta);
    set.diffuse_first = Mask(w, h, 1);
    set.saturated = Mask(w, h, 0);

    parallel_rows(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            if (!trs.valid(x, y)) continue;
            const double rho = trs.rho(x, y);
            const double phi = trs.phi(x, y);
            const auto diffuse = inverter.diffuse(rho);
            const auto specular = inverter.specular(rho);
            const std::array<Vec3, 2> d = {normal_from_angles(diffuse.theta, phi),
                                           normal_from_angles(diffuse.theta, phi + kPi)};
            const std::array<Vec3, 4> s = {normal_from_angles(specular.low, phi + 0.5 * kPi),
                                           normal_from_angles(specular.low, phi - 0.5 * kPi),
                                           normal_from_angles(specular.high, phi + 0.5 * kPi),
                                           normal_from_angles(specular.high, phi - 0.5 * kPi)};
            const bool diffuse_first = cues.alpha_d(x, y) >= cues.alpha_s(x, y);
            std::array<Vec3, NormalPriorSet::kCount> order;
            if (diffuse_first)
                order = {d[0], d[1], s[0], s[1], s[2], s[3]};
            else
                order = {s[0], s[1], s[2], s[3], d[0], d[1]};
            for (std::size_t k = 0; k < order.size(); ++k) set.candidates[k].n(x, y) = order[k];
            set.diffuse_first(x, y) = diffuse_first;
            set.saturated(x, y) = diffuse.saturated;
        }
    });
    return set;
}

}  // namespace sfp
