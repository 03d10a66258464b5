// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

// Reflection-specific degree-of-polarization models for dielectrics and
// their inverses.
//
// Both models are evaluated through c = cos(theta) so that they extend
// smoothly to the normal-incidence limit: rho = (1 - c^2) * kernel(c).

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sfp/error.hpp"
#include "sfp/image.hpp"
#include "sfp/pol_core.hpp"

namespace sfp {

/// Guard keeping zenith angles strictly below grazing.
inline constexpr double kZenithGuard = 1e-6;
inline constexpr double kMaxZenith = 0.5 * kPi - kZenithGuard;
inline constexpr double kZenithTolerance = 1e-8;

inline void check_eta(double eta) {
    if (!(eta > 1.0 && eta <= 3.0)) throw DomainError("refractive index must lie in (1, 3], got " + std::to_string(eta));
}

inline void check_zenith(double theta) {
    if (!(theta >= 0.0 && theta < 0.5 * kPi)) throw DomainError("zenith angle must lie in [0, pi/2), got " + std::to_string(theta));
}

/// Value and c-derivative of a DoP kernel.
struct KernelValue {
    double value;
    double derivative;
};

namespace detail {

inline KernelValue diffuse_kernel(double c, double eta) {
    const double e = eta - 1.0 / eta;
    const double p = eta + 1.0 / eta;
    const double num = e * e;
    const double root = std::sqrt(eta * eta - 1.0 + c * c);
    const double den = 2.0 + 2.0 * eta * eta - p * p * (1.0 - c * c) + 4.0 * c * root;
    const double dden = 2.0 * p * p * c + 4.0 * root + 4.0 * c * c / root;
    return {num / den, -num * dden / (den * den)};
}

inline KernelValue specular_kernel(double c, double eta) {
    const double root = std::sqrt(eta * eta - 1.0 + c * c);
    const double num = 2.0 * c * root;
    const double dnum = 2.0 * root + 2.0 * c * c / root;
    const double c2 = c * c;
    const double den = 1.0 + (eta * eta - 3.0) * c2 + 2.0 * c2 * c2;
    const double dden = 2.0 * (eta * eta - 3.0) * c + 8.0 * c2 * c;
    return {num / den, (dnum * den - num * dden) / (den * den)};
}

}  // namespace detail

/// Diffuse DoP as a function of cos(theta), no domain checks.
inline double dop_diffuse_cos(double c, double eta) { return (1.0 - c * c) * detail::diffuse_kernel(c, eta).value; }

/// Specular DoP as a function of cos(theta), clamped to [0, 1].
inline double dop_specular_cos(double c, double eta) {
    return std::clamp((1.0 - c * c) * detail::specular_kernel(c, eta).value, 0.0, 1.0);
}

inline double dop_diffuse(double theta, double eta) {
    check_zenith(theta);
    check_eta(eta);
    return dop_diffuse_cos(std::cos(theta), eta);
}

inline double dop_specular(double theta, double eta) {
    check_zenith(theta);
    check_eta(eta);
    return dop_specular_cos(std::cos(theta), eta);
}

inline double brewster_angle(double eta) { return std::atan(eta); }

struct ZenithEstimate {
    double theta = 0.0;
    bool saturated = false;
};

namespace detail {

template <class F>
double bisect_increasing(F&& f, double target, double lo, double hi) {
    while (hi - lo > kZenithTolerance) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Unique zenith with dop_diffuse(theta, eta) = rho. Values at or above
/// the model's maximum saturate to the grazing guard.
inline ZenithEstimate zenith_from_dop_diffuse(double rho, double eta) {
    check_eta(eta);
    if (!(rho > 0.0)) return {0.0, false};
    const auto f = [eta](double t) { return dop_diffuse_cos(std::cos(t), eta); };
    if (rho >= f(kMaxZenith)) return {kMaxZenith, true};
    return {detail::bisect_increasing(f, rho, 0.0, kMaxZenith), false};
}

struct SpecularZeniths {
    double low = 0.0;   // branch below Brewster
    double high = 0.0;  // branch above Brewster
};

/// Both zeniths matching a specular DoP, one on each side of Brewster.
inline SpecularZeniths zenith_from_dop_specular(double rho, double eta) {
    check_eta(eta);
    rho = std::clamp(std::isfinite(rho) ? rho : 0.0, 0.0, 1.0);
    const double brewster = brewster_angle(eta);
    if (rho >= 1.0) return {brewster, brewster};
    const auto f = [eta](double t) { return dop_specular_cos(std::cos(t), eta); };
    SpecularZeniths out;
    out.low = rho > 0.0 ? detail::bisect_increasing(f, rho, 0.0, brewster) : 0.0;
    if (rho <= f(kMaxZenith)) {
        out.high = kMaxZenith;
    } else {
        out.high = detail::bisect_increasing([&](double t) { return -f(t); }, -rho, brewster, kMaxZenith);
    }
    return out;
}

/// Table-seeded Newton inversion of both DoP models for one refractive
/// index. Agrees with the bisection inverses above to ~1e-10 rad and is
/// what the per-pixel prior computation uses.
class ZenithInverter {
  public:
    explicit ZenithInverter(double eta, int cells = 1024) : eta_(eta), brewster_(brewster_angle(eta)) {
        check_eta(eta);
        if (cells < 2) throw ConfigError("ZenithInverter: at least 2 cells are required");
        diffuse_ = make_table(0.0, kMaxZenith, cells, &ZenithInverter::diffuse_value);
        low_ = make_table(0.0, brewster_, cells, &ZenithInverter::specular_value);
        high_ = make_table(brewster_, kMaxZenith, cells, &ZenithInverter::specular_value);
        diffuse_max_ = diffuse_.values.back();
        specular_grazing_ = high_.values.back();
    }

    [[nodiscard]] double eta() const { return eta_; }

    [[nodiscard]] ZenithEstimate diffuse(double rho) const {
        if (!(rho > 0.0)) return {0.0, false};
        if (rho >= diffuse_max_) return {kMaxZenith, true};
        return {solve(diffuse_, rho, &ZenithInverter::diffuse_value), false};
    }

    [[nodiscard]] SpecularZeniths specular(double rho) const {
        rho = std::clamp(std::isfinite(rho) ? rho : 0.0, 0.0, 1.0);
        if (rho >= 1.0) return {brewster_, brewster_};
        SpecularZeniths out;
        out.low = rho > 0.0 ? solve(low_, rho, &ZenithInverter::specular_value) : 0.0;
        out.high = rho <= specular_grazing_ ? kMaxZenith : solve(high_, rho, &ZenithInverter::specular_value);
        return out;
    }

  private:
    using Model = KernelValue (ZenithInverter::*)(double) const;

    struct Table {
        double lo = 0.0, step = 0.0;
        std::vector<double> values;  // monotone in theta
        bool increasing = true;
    };

    /// DoP and its theta-derivative.
    [[nodiscard]] KernelValue diffuse_value(double theta) const {
        return with_theta(theta, detail::diffuse_kernel(std::cos(theta), eta_));
    }
    [[nodiscard]] KernelValue specular_value(double theta) const {
        return with_theta(theta, detail::specular_kernel(std::cos(theta), eta_));
    }
    static KernelValue with_theta(double theta, KernelValue k) {
        const double c = std::cos(theta), s = std::sin(theta);
        const double value = (1.0 - c * c) * k.value;
        const double d_c = -2.0 * c * k.value + (1.0 - c * c) * k.derivative;
        return {value, -s * d_c};
    }

    Table make_table(double lo, double hi, int cells, Model f) const {
        Table t{lo, (hi - lo) / cells, std::vector<double>(static_cast<std::size_t>(cells) + 1), true};
        for (int i = 0; i <= cells; ++i) t.values[static_cast<std::size_t>(i)] = (this->*f)(lo + i * t.step).value;
        t.increasing = t.values.back() >= t.values.front();
        return t;
    }

    double solve(const Table& t, double rho, Model f) const {
        const auto& v = t.values;
        std::size_t cell;
        if (t.increasing) {
            cell = static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), rho) - v.begin());
        } else {
            cell = static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), rho, std::greater<>()) - v.begin());
        }
        cell = std::clamp<std::size_t>(cell, 1, v.size() - 1) - 1;
        double a = t.lo + static_cast<double>(cell) * t.step;
        double b = a + t.step;
        const double fa = v[cell] - rho;
        const double fb = v[cell + 1] - rho;
        double x = fb != fa ? a + (b - a) * fa / (fa - fb) : 0.5 * (a + b);
        x = std::clamp(x, a, b);
        for (int it = 0; it < 30; ++it) {
            const KernelValue kv = (this->*f)(x);
            const double r = kv.value - rho;
            if (r == 0.0) return x;
            // Keep the bracket [a, b] around the root.
            if ((r > 0.0) == t.increasing)
                b = x;
            else
                a = x;
            double next = kv.derivative != 0.0 ? x - r / kv.derivative : 0.5 * (a + b);
            if (!(next > a && next < b)) next = 0.5 * (a + b);
            if (std::abs(next - x) < 1e-13 || b - a < 1e-13) return next;
            x = next;
        }
        return x;
    }

    double eta_;
    double brewster_;
    Table diffuse_, low_, high_;
    double diffuse_max_ = 0.0;
    double specular_grazing_ = 0.0;
};

/// Per-pixel unit normals in camera coordinates (x along columns, y along
/// rows, z toward the camera).
struct NormalMap {
    Image<Vec3> n;
    Mask valid;

    [[nodiscard]] int width() const { return n.width(); }
    [[nodiscard]] int height() const { return n.height(); }
    bool operator==(const NormalMap&) const = default;
};

inline NormalMap make_normal_map(int width, int height) {
    return {Image<Vec3>(width, height, Vec3{0.0, 0.0, 1.0}), Mask(width, height, 1)};
}

inline Vec3 normal_from_angles(double zenith, double azimuth) {
    const double s = std::sin(zenith);
    return {s * std::cos(azimuth), s * std::sin(azimuth), std::cos(zenith)};
}

inline double zenith_of(const Vec3& n) { return std::acos(std::clamp(n.z, -1.0, 1.0)); }
inline double azimuth_of(const Vec3& n) { return std::atan2(n.y, n.x); }

}  // namespace sfp
