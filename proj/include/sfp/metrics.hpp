// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

// Evaluation metrics and the JSON evaluation report.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "sfp/error.hpp"
#include "sfp/fresnel.hpp"
#include "sfp/image.hpp"
#include "sfp/parallel.hpp"
#include "sfp/pol_core.hpp"

namespace sfp {

/// Mean angle between corresponding normals over the mask, in degrees.
inline double mae_degrees(const NormalMap& est, const NormalMap& gt, const Mask& mask) {
    require_same_shape(est.n, gt.n, "mae_degrees");
    require_same_shape(est.n, mask, "mae_degrees");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        const Vec3& a = est.n[i];
        const Vec3& b = gt.n[i];
        // atan2 form keeps full precision near 0 and 180 degrees.
        const Vec3 c{a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
        sum += std::atan2(norm(c), dot(a, b));
        ++n;
    }
    if (n == 0) throw EvalError("mae_degrees: empty mask");
    return rad2deg(sum / static_cast<double>(n));
}

/// Mean absolute pi-periodic phase difference over the mask, in degrees.
inline double aop_mae(const Plane& est_phi, const Plane& gt_phi, const Mask& mask) {
    require_same_shape(est_phi, gt_phi, "aop_mae");
    require_same_shape(est_phi, mask, "aop_mae");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        sum += std::abs(wrapped_difference(est_phi[i], gt_phi[i]));
        ++n;
    }
    if (n == 0) throw EvalError("aop_mae: empty mask");
    return rad2deg(sum / static_cast<double>(n));
}

namespace detail {

/// Normalized Gaussian blur, window truncated at the image border.
inline Plane gaussian_blur(const Plane& src, int radius, double sigma) {
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    for (int i = -radius; i <= radius; ++i) k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    const int w = src.width();
    const int h = src.height();
    Plane tmp(w, h), out(w, h);
    parallel_rows(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0, ws = 0.0;
            for (int d = -radius; d <= radius; ++d) {
                const int xx = x + d;
                if (xx < 0 || xx >= w) continue;
                const double kw = k[static_cast<std::size_t>(d + radius)];
                s += kw * src(xx, y);
                ws += kw;
            }
            tmp(x, y) = s / ws;
        }
    });
    parallel_rows(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0, ws = 0.0;
            for (int d = -radius; d <= radius; ++d) {
                const int yy = y + d;
                if (yy < 0 || yy >= h) continue;
                const double kw = k[static_cast<std::size_t>(d + radius)];
                s += kw * tmp(x, yy);
                ws += kw;
            }
            out(x, y) = s / ws;
        }
    });
    return out;
}

}  // namespace detail

/// Mean structural similarity with an 11x11 Gaussian window (sigma 1.5).
/// The dynamic range is taken from the joint extent of both planes, and
/// the mean excludes the 5-pixel border where the window is truncated.
inline double ssim(const Plane& a, const Plane& b) {
    require_same_shape(a, b, "ssim");
    if (a.empty()) throw EvalError("ssim: empty planes");
    double lo = a[0], hi = a[0];
    for (std::size_t i = 0; i < a.size(); ++i) {
        lo = std::min({lo, a[i], b[i]});
        hi = std::max({hi, a[i], b[i]});
    }
    const double range = hi > lo ? hi - lo : 1.0;
    const double c1 = (0.01 * range) * (0.01 * range);
    const double c2 = (0.03 * range) * (0.03 * range);

    Plane aa(a.width(), a.height()), bb(a.width(), a.height()), ab(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    constexpr int kRadius = 5;
    constexpr double kSigma = 1.5;
    const Plane ma = detail::gaussian_blur(a, kRadius, kSigma);
    const Plane mb = detail::gaussian_blur(b, kRadius, kSigma);
    const Plane saa = detail::gaussian_blur(aa, kRadius, kSigma);
    const Plane sbb = detail::gaussian_blur(bb, kRadius, kSigma);
    const Plane sab = detail::gaussian_blur(ab, kRadius, kSigma);

    // Average over pixels whose full window fits; tiny planes use every pixel.
    const bool crop = a.width() > 2 * kRadius && a.height() > 2 * kRadius;
    const int m = crop ? kRadius : 0;
    const int rows = a.height() - 2 * m;
    const double total = parallel_row_sum(rows, [&](int r) {
        const int y = r + m;
        double s = 0.0;
        for (int x = m; x < a.width() - m; ++x) {
            const std::size_t i = a.index(x, y);
            const double va = std::max(saa[i] - ma[i] * ma[i], 0.0);
            const double vb = std::max(sbb[i] - mb[i] * mb[i], 0.0);
            const double cov = sab[i] - ma[i] * mb[i];
            s += ((2.0 * ma[i] * mb[i] + c1) * (2.0 * cov + c2)) /
                 ((ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2));
        }
        return s;
    });
    const double n = static_cast<double>(rows) * static_cast<double>(a.width() - 2 * m);
    return std::clamp(total / n, -1.0, 1.0);
}

struct EvalReport {
    double mae_deg = 0.0;
    double aop_mae_deg = 0.0;
    double dop_ssim = 0.0;
    double stack_ssim = 0.0;
    std::size_t n_valid = 0;
    std::map<std::string, double> timings;

    bool operator==(const EvalReport&) const = default;
};

inline void to_json(nlohmann::json& j, const EvalReport& r) {
    j = nlohmann::json{{"mae_deg", r.mae_deg},       {"aop_mae_deg", r.aop_mae_deg}, {"dop_ssim", r.dop_ssim},
                       {"stack_ssim", r.stack_ssim}, {"n_valid", r.n_valid},         {"timings", r.timings}};
}

inline void from_json(const nlohmann::json& j, EvalReport& r) {
    try {
        j.at("mae_deg").get_to(r.mae_deg);
        j.at("aop_mae_deg").get_to(r.aop_mae_deg);
        j.at("dop_ssim").get_to(r.dop_ssim);
        j.at("stack_ssim").get_to(r.stack_ssim);
        j.at("n_valid").get_to(r.n_valid);
        r.timings.clear();
        if (j.contains("timings")) j.at("timings").get_to(r.timings);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("eval report: ") + e.what());
    }
}

/// Default evaluation mask: valid pixels minus a 2-pixel border.
inline Mask evaluation_mask(const Mask& valid) { return erode_border(valid, 2); }

inline Plane azimuth_plane(const NormalMap& normals) {
    Plane out(normals.width(), normals.height());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = wrap_pi(azimuth_of(normals.n[i]));
    return out;
}

}  // namespace sfp
