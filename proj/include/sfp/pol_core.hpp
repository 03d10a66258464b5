// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

// Polarization image stacks and the per-pixel transmitted radiance
// sinusoid I(a) = A + B cos(2a - 2 phi).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sfp/error.hpp"
#include "sfp/image.hpp"
#include "sfp/parallel.hpp"

namespace sfp {

inline constexpr double kPi = std::numbers::pi;

/// Maps an angle onto [0, pi).
inline double wrap_pi(double angle) {
    double a = std::fmod(angle, kPi);
    if (a < 0.0) a += kPi;
    if (a >= kPi) a -= kPi;
    return a;
}

/// Signed difference of two pi-periodic angles, in [-pi/2, pi/2).
inline double wrapped_difference(double a, double b) {
    double d = std::fmod(a - b, kPi);
    if (d >= 0.5 * kPi) d -= kPi;
    if (d < -0.5 * kPi) d += kPi;
    return d;
}

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// K co-registered intensity planes taken behind a linear polarizer at
/// known angles. Validated on construction and immutable afterwards.
class PolarizationStack {
  public:
    PolarizationStack() = default;

    PolarizationStack(std::vector<double> angles, std::vector<Plane> images)
        : angles_(std::move(angles)), images_(std::move(images)) {
        validate();
    }

    static std::vector<double> canonical_angles() { return {0.0, kPi / 4.0, kPi / 2.0, 3.0 * kPi / 4.0}; }

    [[nodiscard]] int width() const { return images_.empty() ? 0 : images_.front().width(); }
    [[nodiscard]] int height() const { return images_.empty() ? 0 : images_.front().height(); }
    [[nodiscard]] std::size_t count() const { return images_.size(); }
    [[nodiscard]] const std::vector<double>& angles() const { return angles_; }
    [[nodiscard]] const std::vector<Plane>& images() const { return images_; }
    [[nodiscard]] const Plane& image(std::size_t i) const { return images_.at(i); }

    /// Index of the plane whose angle equals `angle` modulo pi.
    [[nodiscard]] std::optional<std::size_t> find_angle(double angle, double tol = 1e-9) const {
        for (std::size_t i = 0; i < angles_.size(); ++i) {
            if (std::abs(wrapped_difference(angles_[i], angle)) < tol) return i;
        }
        return std::nullopt;
    }

    friend bool operator==(const PolarizationStack&, const PolarizationStack&) = default;

  private:
    void validate() const {
        if (angles_.size() != images_.size()) throw InputError("stack: angle count does not match plane count");
        if (angles_.size() < 3) throw ConfigError("stack: at least 3 polarizer angles are required");
        for (std::size_t i = 0; i < angles_.size(); ++i) {
            if (!std::isfinite(angles_[i])) throw ConfigError("stack: non-finite polarizer angle");
            for (std::size_t j = 0; j < i; ++j) {
                if (std::abs(wrapped_difference(angles_[i], angles_[j])) < 1e-9) {
                    throw ConfigError("stack: polarizer angles must be distinct modulo pi");
                }
            }
        }
        for (const auto& plane : images_) {
            require_same_shape(plane, images_.front(), "stack");
            for (double v : plane.pixels()) {
                if (!std::isfinite(v)) throw InputError("stack: non-finite intensity");
                if (v < 0.0) throw InputError("stack: negative intensity");
            }
        }
    }

    std::vector<double> angles_;
    std::vector<Plane> images_;
};

/// Per-pixel sinusoid parameters. Under the mixed model the planes hold
/// A_m, B_m and the fitted phase.
struct TRSMap {
    Plane A;
    Plane B;
    Plane phi;
    Plane rho;
    Mask valid;
    Mask clamped;  // fitted B exceeded A and was clamped

    [[nodiscard]] int width() const { return A.width(); }
    [[nodiscard]] int height() const { return A.height(); }
    bool operator==(const TRSMap&) const = default;
};

inline constexpr double kDefaultAFloor = 1e-4;

enum class FitMethod {
    automatic,  // closed form for the canonical four angles, generic otherwise
    generic,    // always the 3-unknown least-squares solve
};

namespace detail {

struct SinusoidCoefficients {
    double dc;
    double c2;  // B cos(2 phi)
    double s2;  // B sin(2 phi)
};

/// Rows of (F^T F)^{-1} F^T for the design f_i = [1, cos 2a_i, sin 2a_i].
inline std::vector<std::array<double, 3>> pseudo_inverse(const std::vector<double>& angles) {
    double m[3][3] = {};
    for (double a : angles) {
        const double f[3] = {1.0, std::cos(2.0 * a), std::sin(2.0 * a)};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) m[r][c] += f[r] * f[c];
    }
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if (std::abs(det) < 1e-12) throw ConfigError("fit_trs: polarizer angles give a singular design matrix");
    double inv[3][3];
    inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;

    std::vector<std::array<double, 3>> pinv(angles.size());
    for (std::size_t i = 0; i < angles.size(); ++i) {
        const double f[3] = {1.0, std::cos(2.0 * angles[i]), std::sin(2.0 * angles[i])};
        for (int r = 0; r < 3; ++r) pinv[i][r] = inv[r][0] * f[0] + inv[r][1] * f[1] + inv[r][2] * f[2];
    }
    return pinv;
}

/// Plane indices of 0, pi/4, pi/2, 3pi/4 when the stack holds exactly
/// those four angles.
inline std::optional<std::array<std::size_t, 4>> canonical_layout(const PolarizationStack& stack) {
    if (stack.count() != 4) return std::nullopt;
    std::array<std::size_t, 4> idx{};
    const auto canon = PolarizationStack::canonical_angles();
    for (std::size_t k = 0; k < 4; ++k) {
        auto i = stack.find_angle(canon[k], 1e-12);
        if (!i) return std::nullopt;
        idx[k] = *i;
    }
    return idx;
}

}  // namespace detail

/// Least-squares sinusoid fit per pixel. Pixels with A < a_floor are
/// invalid (phi = 0, rho = 0); B is clamped to A so rho stays in [0, 1].
inline TRSMap fit_trs(const PolarizationStack& stack, double a_floor = kDefaultAFloor,
                      FitMethod method = FitMethod::automatic) {
    if (stack.count() < 3) throw ConfigError("fit_trs: at least 3 distinct polarizer angles are required");
    const int w = stack.width();
    const int h = stack.height();
    TRSMap trs{Plane(w, h), Plane(w, h), Plane(w, h), Plane(w, h), Mask(w, h), Mask(w, h)};

    const auto layout = method == FitMethod::automatic ? detail::canonical_layout(stack) : std::nullopt;
    const auto pinv = detail::pseudo_inverse(stack.angles());
    const std::size_t k = stack.count();

    parallel_rows(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            detail::SinusoidCoefficients c{};
            if (layout) {
                const double i0 = stack.image((*layout)[0])(x, y);
                const double i45 = stack.image((*layout)[1])(x, y);
                const double i90 = stack.image((*layout)[2])(x, y);
                const double i135 = stack.image((*layout)[3])(x, y);
                c = {(i0 + i45 + i90 + i135) / 4.0, (i0 - i90) / 2.0, (i45 - i135) / 2.0};
            } else {
                for (std::size_t i = 0; i < k; ++i) {
                    const double v = stack.image(i)(x, y);
                    c.dc += pinv[i][0] * v;
                    c.c2 += pinv[i][1] * v;
                    c.s2 += pinv[i][2] * v;
                }
            }
            if (!std::isfinite(c.dc) || !std::isfinite(c.c2) || !std::isfinite(c.s2)) {
                throw InputError("fit_trs: non-finite fit");
            }
            trs.A(x, y) = c.dc;
            if (c.dc < a_floor) continue;  // invalid: B = phi = rho = 0
            double b = std::hypot(c.c2, c.s2);
            if (b > c.dc) {
                b = c.dc;
                trs.clamped(x, y) = 1;
            }
            trs.B(x, y) = b;
            trs.phi(x, y) = wrap_pi(0.5 * std::atan2(c.s2, c.c2));
            trs.rho(x, y) = b / c.dc;
            trs.valid(x, y) = 1;
        }
    });
    return trs;
}

/// Evaluates the sinusoid at the given angles. Invalid pixels render as A.
inline PolarizationStack render_trs(const TRSMap& trs, const std::vector<double>& angles) {
    const int w = trs.width();
    const int h = trs.height();
    std::vector<Plane> images(angles.size(), Plane(w, h));
    parallel_rows(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const double a = trs.A(x, y);
            for (std::size_t i = 0; i < angles.size(); ++i) {
                double v = a;
                if (trs.valid(x, y)) v += trs.B(x, y) * std::cos(2.0 * angles[i] - 2.0 * trs.phi(x, y));
                images[i](x, y) = std::max(0.0, v);
            }
        }
    });
    return PolarizationStack(angles, std::move(images));
}

/// Polarizer angle (radians) of each sensor in a 2x2 super-pixel,
/// indexed [row][column].
using MosaicPattern = std::array<std::array<double, 2>, 2>;

inline MosaicPattern default_mosaic_pattern() { return {{{0.0, kPi / 4.0}, {kPi / 2.0, 3.0 * kPi / 4.0}}}; }

/// Nearest-sample demosaic: each 2x2 cell becomes one pixel of a
/// half-resolution stack, planes ordered by ascending angle.
inline PolarizationStack demosaic(const Plane& mosaic, const MosaicPattern& pattern = default_mosaic_pattern()) {
    if (mosaic.width() % 2 != 0 || mosaic.height() % 2 != 0 || mosaic.empty()) {
        throw InputError("demosaic: mosaic dimensions must be even and non-zero");
    }
    struct Site {
        double angle;
        int dx;
        int dy;
    };
    std::vector<Site> sites;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) sites.push_back({pattern[r][c], c, r});
    std::sort(sites.begin(), sites.end(), [](const Site& a, const Site& b) { return a.angle < b.angle; });

    const int w = mosaic.width() / 2;
    const int h = mosaic.height() / 2;
    std::vector<double> angles;
    std::vector<Plane> images;
    for (const auto& s : sites) {
        Plane p(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) p(x, y) = mosaic(2 * x + s.dx, 2 * y + s.dy);
        angles.push_back(s.angle);
        images.push_back(std::move(p));
    }
    return PolarizationStack(std::move(angles), std::move(images));
}

/// Inverse of demosaic: interleaves a stack into a full-resolution mosaic.
inline Plane interleave(const PolarizationStack& stack, const MosaicPattern& pattern = default_mosaic_pattern()) {
    Plane mosaic(2 * stack.width(), 2 * stack.height());
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            auto i = stack.find_angle(pattern[r][c]);
            if (!i) throw InputError("interleave: stack lacks an angle used by the mosaic pattern");
            const Plane& src = stack.image(*i);
            for (int y = 0; y < stack.height(); ++y)
                for (int x = 0; x < stack.width(); ++x) mosaic(2 * x + c, 2 * y + r) = src(x, y);
        }
    }
    return mosaic;
}

}  // namespace sfp
