// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

// Self-supervised depth and normal recovery: first-order optimization of
// reconstruction + depth/normal consistency + polarizer-angle ratio losses
// over per-pixel shape parameters.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sfp/error.hpp"
#include "sfp/fresnel.hpp"
#include "sfp/image.hpp"
#include "sfp/parallel.hpp"
#include "sfp/pol_core.hpp"
#include "sfp/priors.hpp"
#include "sfp/refractive.hpp"
#include "sfp/separation.hpp"

namespace sfp {

struct DepthMap {
    Plane z;

    [[nodiscard]] int width() const { return z.width(); }
    [[nodiscard]] int height() const { return z.height(); }
    bool operator==(const DepthMap&) const = default;
};

struct OptimConfig {
    double lambda1 = 1.0;  // intensity reconstruction
    double lambda2 = 2.5;  // DoP
    double lambda3 = 2.5;  // AoP
    double lambda_geo = 1.0;
    double lambda_ratio = 1.0;
    int iters = 2500;
    double lr = 0.001;
    double lr_decay = 0.1;
    int lr_decay_every = 250;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double eta_init = 1.5;
    int outer_eta_rounds = 3;
    EtaBracket eta_bracket{};
    double a_floor = kDefaultAFloor;

    void validate() const {
        if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0 || lambda_geo < 0 || lambda_ratio < 0) {
            throw ConfigError("optim: loss weights must be >= 0");
        }
        if (iters < 1) throw ConfigError("optim: iters must be >= 1");
        if (!(lr > 0)) throw ConfigError("optim: lr must be > 0");
        if (!(lr_decay > 0) || lr_decay_every < 1) throw ConfigError("optim: invalid learning-rate schedule");
        if (outer_eta_rounds < 0) throw ConfigError("optim: outer_eta_rounds must be >= 0");
        if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && adam_epsilon > 0)) {
            throw ConfigError("optim: invalid moment parameters");
        }
        check_eta(eta_init);
    }
};

struct LossTerms {
    double rec = 0.0;    // weighted by lambda1..3
    double geo = 0.0;    // unweighted
    double ratio = 0.0;  // unweighted
    double total = 0.0;
};

struct ShapeEstimate {
    NormalMap normals;
    DepthMap depth;
    EtaEstimate eta;
    std::vector<LossTerms> loss_trace;
};

// ---------------------------------------------------------------------------
// Finite differences: central in the interior, one-sided at the borders.

namespace detail {

/// Weight of z[k] in the derivative at position j of a line of length n.
inline double stencil_weight(int j, int k, int n) {
    if (n < 2) return 0.0;
    if (j == 0) return k == 0 ? -1.0 : (k == 1 ? 1.0 : 0.0);
    if (j == n - 1) return k == n - 1 ? 1.0 : (k == n - 2 ? -1.0 : 0.0);
    return k == j + 1 ? 0.5 : (k == j - 1 ? -0.5 : 0.0);
}

inline double line_derivative(int j, int n, double prev, double here, double next) {
    if (n < 2) return 0.0;
    if (j == 0) return next - here;
    if (j == n - 1) return here - prev;
    return 0.5 * (next - prev);
}

/// Adjoint of the derivative stencil: out[k] = sum_j w(j, k) g[j].
inline double line_adjoint(int k, int n, double g_prev, double g_here, double g_next) {
    double v = 0.0;
    if (k > 0) v += stencil_weight(k - 1, k, n) * g_prev;
    v += stencil_weight(k, k, n) * g_here;
    if (k < n - 1) v += stencil_weight(k + 1, k, n) * g_next;
    return v;
}

}  // namespace detail

struct DepthGradient {
    Plane zx, zy;
};

inline DepthGradient depth_gradient(const Plane& z) {
    const int w = z.width();
    const int h = z.height();
    DepthGradient g{Plane(w, h), Plane(w, h)};
    parallel_rows(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const double here = z(x, y);
            g.zx(x, y) = detail::line_derivative(x, w, x > 0 ? z(x - 1, y) : here, here, x + 1 < w ? z(x + 1, y) : here);
            g.zy(x, y) = detail::line_derivative(y, h, y > 0 ? z(x, y - 1) : here, here, y + 1 < h ? z(x, y + 1) : here);
        }
    });
    return g;
}

/// Adjoint of depth_gradient: d/dz of sum(gx * zx + gy * zy).
inline Plane depth_gradient_adjoint(const Plane& gx, const Plane& gy) {
    const int w = gx.width();
    const int h = gx.height();
    Plane out(w, h);
    parallel_rows(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const double ax = detail::line_adjoint(x, w, x > 0 ? gx(x - 1, y) : 0.0, gx(x, y), x + 1 < w ? gx(x + 1, y) : 0.0);
            const double ay = detail::line_adjoint(y, h, y > 0 ? gy(x, y - 1) : 0.0, gy(x, y), y + 1 < h ? gy(x, y + 1) : 0.0);
            out(x, y) = ax + ay;
        }
    });
    return out;
}

inline Vec3 normal_from_gradient(double zx, double zy) {
    const double inv = 1.0 / std::sqrt(zx * zx + zy * zy + 1.0);
    return {-zx * inv, -zy * inv, inv};
}

inline NormalMap normals_from_depth(const DepthMap& depth) {
    const auto g = depth_gradient(depth.z);
    NormalMap out = make_normal_map(depth.width(), depth.height());
    for (std::size_t i = 0; i < out.n.size(); ++i) out.n[i] = normal_from_gradient(g.zx[i], g.zy[i]);
    return out;
}

/// Least-squares depth whose finite-difference normals best match the
/// given field (conjugate gradients on the normal equations). Slopes are
/// capped at `max_slope`; the result has zero mean.
inline DepthMap integrate_normals(const NormalMap& normals, int max_iters = 20000, double tol = 1e-13,
                                  double max_slope = 20.0) {
    const int w = normals.width();
    const int h = normals.height();
    Plane gx(w, h), gy(w, h);
    for (std::size_t i = 0; i < gx.size(); ++i) {
        if (!normals.valid[i]) continue;
        const Vec3& n = normals.n[i];
        const double nz = std::max(n.z, 1e-12);
        double sx = -n.x / nz, sy = -n.y / nz;
        const double mag = std::hypot(sx, sy);
        if (mag > max_slope) {
            sx *= max_slope / mag;
            sy *= max_slope / mag;
        }
        gx[i] = sx;
        gy[i] = sy;
    }
    auto apply = [&](const Plane& v) {
        const auto d = depth_gradient(v);
        return depth_gradient_adjoint(d.zx, d.zy);
    };
    auto dot_planes = [](const Plane& a, const Plane& b) {
        return parallel_row_sum(a.height(), [&](int y) {
            double s = 0.0;
            auto ra = a.row(y);
            auto rb = b.row(y);
            for (std::size_t i = 0; i < ra.size(); ++i) s += ra[i] * rb[i];
            return s;
        });
    };

    Plane z(w, h);
    Plane r = depth_gradient_adjoint(gx, gy);
    Plane p = r;
    double rr = dot_planes(r, r);
    const double rr0 = rr;
    for (int it = 0; it < max_iters && rr > tol * tol * rr0 && rr > 0.0; ++it) {
        const Plane ap = apply(p);
        const double pap = dot_planes(p, ap);
        if (!(pap > 0.0)) break;
        const double step = rr / pap;
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        const double rr_next = dot_planes(r, r);
        const double beta = rr_next / rr;
        rr = rr_next;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
    }
    double mean = 0.0;
    for (double v : z.pixels()) mean += v;
    mean /= static_cast<double>(std::max<std::size_t>(z.size(), 1));
    for (double& v : z.pixels()) v -= mean;
    return {std::move(z)};
}

// ---------------------------------------------------------------------------
// Losses

/// Mean of 1 - n . z_d over the valid pixels of `normals`.
inline double loss_geometric(const NormalMap& normals, const DepthMap& depth) {
    require_same_shape(normals.n, depth.z, "loss_geometric");
    const auto g = depth_gradient(depth.z);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < g.zx.size(); ++i) {
        if (!normals.valid[i]) continue;
        sum += 1.0 - dot(normals.n[i], normal_from_gradient(g.zx[i], g.zy[i]));
        ++n;
    }
    if (n == 0) throw InputError("loss_geometric: no valid pixels");
    return sum / static_cast<double>(n);
}

/// Per-pixel gradients of the losses with respect to the normal vector
/// (ambient, before projection onto the sphere) and the depth.
struct LossGradient {
    Image<Vec3> dn;
    Plane dz;
};

/// The full objective over a fixed scene. Holds the per-pixel
/// measurements, cues and components; evaluates the loss terms and their
/// analytic gradients for any normal/depth field.
class ShapeObjective {
  public:
    /// Below this measured DoP the phase is undefined and the AoP term
    /// is skipped.
    static constexpr double kPhaseDopFloor = 1e-9;

    ShapeObjective(const PolarizationStack& stack, const TRSMap& trs, const MixedComponents& mc,
                   const ReflectanceCues& cues, const OptimConfig& config, double eta)
        : width_(trs.width()), height_(trs.height()), config_(config), eta_(eta) {
        check_eta(eta);
        require_same_shape(stack.image(0), trs.A, "shape objective");
        require_same_shape(trs.A, mc.A_d, "shape objective");
        require_same_shape(trs.A, cues.alpha_d, "shape objective");
        const auto i0 = stack.find_angle(0.0);
        const auto i45 = stack.find_angle(0.25 * kPi);
        if (!i0 || !i45) throw ConfigError("shape objective: the ratio loss needs the 0 and pi/4 polarizer planes");
        for (double a : stack.angles()) angle_cs_.push_back({std::cos(2.0 * a), std::sin(2.0 * a)});
        k_ = stack.count();

        pixels_.resize(trs.A.size());
        intensities_.resize(trs.A.size() * k_);
        valid_ = trs.valid;
        for (int y = 0; y < height_; ++y) {
            for (int x = 0; x < width_; ++x) {
                const std::size_t i = trs.A.index(x, y);
                Pixel& p = pixels_[i];
                p.A = trs.A[i];
                p.rho = trs.rho[i];
                p.phi = trs.phi[i];
                p.alpha_d = cues.alpha_d[i];
                p.alpha_s = cues.alpha_s[i];
                if (p.alpha_d + p.alpha_s <= 0.0) p.alpha_d = 1.0;
                p.diffuse_phase = p.alpha_d >= p.alpha_s;
                p.phase_defined = p.rho > kPhaseDopFloor;
                const double I0 = stack.image(*i0)[i];
                const double I45 = stack.image(*i45)[i];
                p.F_d = -I45 + mc.A_d[i];
                p.G_d = I0 - mc.A_d[i] + mc.rho_d[i] * mc.A_d[i];
                p.F_s = -I45 + mc.A_s[i];
                p.G_s = I0 - mc.A_s[i] + mc.rho_s[i] * mc.A_s[i];
                for (std::size_t k = 0; k < k_; ++k) intensities_[i * k_ + k] = stack.image(k)[i];
                if (valid_[i]) ++n_valid_;
            }
        }
        if (n_valid_ == 0) throw InputError("shape objective: no valid pixels");
    }

    void set_eta(double eta) {
        check_eta(eta);
        eta_ = eta;
    }
    [[nodiscard]] double eta() const { return eta_; }
    [[nodiscard]] const OptimConfig& config() const { return config_; }
    [[nodiscard]] const Mask& valid() const { return valid_; }
    [[nodiscard]] std::size_t valid_count() const { return n_valid_; }
    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }

    /// Predicted AoP of a normal at pixel i.
    [[nodiscard]] double predicted_phase(std::size_t i, const Vec3& n) const {
        const double a = std::atan2(n.y, n.x);
        return wrap_pi(pixels_[i].diffuse_phase ? a : a + 0.5 * kPi);
    }

    /// Mixed DoP predicted for a normal at pixel i.
    [[nodiscard]] double predicted_dop(std::size_t i, const Vec3& n) const {
        return (1.0 - n.z * n.z) * std::abs(mixed_kernel(pixels_[i], n.z).value);
    }

    /// Re-rendered intensity at polarizer plane k.
    [[nodiscard]] double predicted_intensity(std::size_t i, std::size_t k, const Vec3& n) const {
        const Pixel& p = pixels_[i];
        const double ak = std::abs(mixed_kernel(p, n.z).value);
        const double q = angle_cs_[k].c * (n.x * n.x - n.y * n.y) + angle_cs_[k].s * 2.0 * n.x * n.y;
        return p.A + (p.diffuse_phase ? 1.0 : -1.0) * p.A * ak * q;
    }

    LossTerms evaluate(const Image<Vec3>& normals, const Plane& z, LossGradient* grad = nullptr) const {
        require_same_shape(normals, z, "shape objective");
        if (normals.width() != width_ || normals.height() != height_) throw InputError("shape objective: size mismatch");
        const auto dg = depth_gradient(z);
        Plane gzx, gzy;
        if (grad) {
            grad->dn = Image<Vec3>(width_, height_);
            gzx = Plane(width_, height_);
            gzy = Plane(width_, height_);
        }
        std::vector<double> rec_rows(static_cast<std::size_t>(height_)), geo_rows(rec_rows.size()),
            ratio_rows(rec_rows.size());
        const double inv_n = 1.0 / static_cast<double>(n_valid_);

        parallel_rows(height_, [&](int y) {
            double rec = 0.0, geo = 0.0, ratio = 0.0;
            for (int x = 0; x < width_; ++x) {
                const std::size_t i = z.index(x, y);
                if (!valid_[i]) continue;
                const Vec3& n = normals[i];
                const double zx = dg.zx[i];
                const double zy = dg.zy[i];
                Vec3 gn{};
                double g_zx = 0.0, g_zy = 0.0;
                rec += reconstruction_term(i, n, grad ? &gn : nullptr);
                geo += geometric_term(n, zx, zy, grad ? &gn : nullptr, &g_zx, &g_zy);
                ratio += ratio_term(pixels_[i], zx, zy, &g_zx, &g_zy);
                if (grad) {
                    grad->dn[i] = {gn.x * inv_n, gn.y * inv_n, gn.z * inv_n};
                    gzx[i] = g_zx * inv_n;
                    gzy[i] = g_zy * inv_n;
                }
            }
            rec_rows[static_cast<std::size_t>(y)] = rec;
            geo_rows[static_cast<std::size_t>(y)] = geo;
            ratio_rows[static_cast<std::size_t>(y)] = ratio;
        });
        if (grad) grad->dz = depth_gradient_adjoint(gzx, gzy);

        LossTerms t;
        for (std::size_t r = 0; r < rec_rows.size(); ++r) {
            t.rec += rec_rows[r];
            t.geo += geo_rows[r];
            t.ratio += ratio_rows[r];
        }
        t.rec *= inv_n;
        t.geo *= inv_n;
        t.ratio *= inv_n;
        t.total = t.rec + config_.lambda_geo * t.geo + config_.lambda_ratio * t.ratio;
        return t;
    }

  private:
    struct Pixel {
        double A, rho, phi;
        double alpha_d, alpha_s;
        bool diffuse_phase;
        bool phase_defined;
        double F_d, G_d, F_s, G_s;
    };
    struct AngleCS {
        double c, s;
    };

    /// (alpha_d k_d - alpha_s k_s) / (alpha_d + alpha_s); times (1 - c^2)
    /// it is the signed mixed DoP.
    [[nodiscard]] KernelValue mixed_kernel(const Pixel& p, double c) const {
        const auto kd = detail::diffuse_kernel(c, eta_);
        const auto ks = detail::specular_kernel(c, eta_);
        const double inv = 1.0 / (p.alpha_d + p.alpha_s);
        return {(p.alpha_d * kd.value - p.alpha_s * ks.value) * inv,
                (p.alpha_d * kd.derivative - p.alpha_s * ks.derivative) * inv};
    }

    double reconstruction_term(std::size_t i, const Vec3& n, Vec3* gn) const {
        const Pixel& p = pixels_[i];
        const double c = n.z;
        const auto k = mixed_kernel(p, c);
        const double sg = k.value >= 0.0 ? 1.0 : -1.0;
        const double ak = std::abs(k.value);
        const double dak = sg * k.derivative;
        const double sigma = p.diffuse_phase ? 1.0 : -1.0;
        const double s2 = 1.0 - c * c;

        double loss = 0.0;
        double d_c = 0.0, d_x = 0.0, d_y = 0.0;
        const double* I = &intensities_[i * k_];
        const double xx = n.x * n.x - n.y * n.y;
        const double xy = 2.0 * n.x * n.y;
        for (std::size_t a = 0; a < k_; ++a) {
            const double C = angle_cs_[a].c, S = angle_cs_[a].s;
            const double q = C * xx + S * xy;
            const double e = p.A + sigma * p.A * ak * q - I[a];
            loss += config_.lambda1 * e * e;
            if (gn) {
                const double ge = 2.0 * config_.lambda1 * e * sigma * p.A;
                d_c += ge * dak * q;
                d_x += ge * ak * (2.0 * C * n.x + 2.0 * S * n.y);
                d_y += ge * ak * (-2.0 * C * n.y + 2.0 * S * n.x);
            }
        }

        const double rho_hat = s2 * ak;
        const double er = rho_hat - p.rho;
        loss += config_.lambda2 * er * er;
        if (gn) d_c += 2.0 * config_.lambda2 * er * (-2.0 * c * ak + s2 * dak);

        const double a = std::atan2(n.y, n.x);
        const double phi_hat = wrap_pi(p.diffuse_phase ? a : a + 0.5 * kPi);
        const double d = p.phase_defined ? wrapped_difference(phi_hat, p.phi) : 0.0;
        loss += config_.lambda3 * std::abs(d);
        if (gn) {
            const double r2 = n.x * n.x + n.y * n.y;
            if (r2 > 1e-300 && d != 0.0) {
                const double sd = d > 0.0 ? config_.lambda3 : -config_.lambda3;
                d_x += sd * (-n.y / r2);
                d_y += sd * (n.x / r2);
            }
            gn->x += d_x;
            gn->y += d_y;
            gn->z += d_c;
        }
        return loss;
    }

    double geometric_term(const Vec3& n, double zx, double zy, Vec3* gn, double* g_zx, double* g_zy) const {
        const double lam = config_.lambda_geo;
        const double w = std::sqrt(1.0 + zx * zx + zy * zy);
        const double dotv = (-n.x * zx - n.y * zy + n.z) / w;
        if (gn) {
            gn->x += lam * zx / w;
            gn->y += lam * zy / w;
            gn->z += -lam / w;
            *g_zx += -lam * (-n.x / w - dotv * zx / (w * w));
            *g_zy += -lam * (-n.y / w - dotv * zy / (w * w));
        }
        return 1.0 - dotv;
    }

    double ratio_term(const Pixel& p, double zx, double zy, double* g_zx, double* g_zy) const {
        const double rd = p.F_d * zx + p.G_d * zy;
        const double rs = p.F_s * zy - p.G_s * zx;
        const double sd = rd > 0.0 ? 1.0 : (rd < 0.0 ? -1.0 : 0.0);
        const double ss = rs > 0.0 ? 1.0 : (rs < 0.0 ? -1.0 : 0.0);
        const double lam = config_.lambda_ratio;
        *g_zx += lam * (p.alpha_d * sd * p.F_d - p.alpha_s * ss * p.G_s);
        *g_zy += lam * (p.alpha_d * sd * p.G_d + p.alpha_s * ss * p.F_s);
        return p.alpha_d * std::abs(rd) + p.alpha_s * std::abs(rs);
    }

    int width_, height_;
    OptimConfig config_;
    double eta_;
    std::size_t k_ = 0;
    std::vector<AngleCS> angle_cs_;
    std::vector<Pixel> pixels_;
    std::vector<double> intensities_;
    Mask valid_;
    std::size_t n_valid_ = 0;
};

inline double loss_reconstruction(const PolarizationStack& stack, const TRSMap& trs, const NormalMap& normals,
                                  const MixedComponents& mc, const ReflectanceCues& cues, double eta,
                                  const OptimConfig& config = {}) {
    const ShapeObjective objective(stack, trs, mc, cues, config, eta);
    return objective.evaluate(normals.n, Plane(trs.width(), trs.height())).rec;
}

inline double loss_ratio(const PolarizationStack& stack, const TRSMap& trs, const MixedComponents& mc,
                         const ReflectanceCues& cues, const DepthMap& depth) {
    const ShapeObjective objective(stack, trs, mc, cues, OptimConfig{}, 1.5);
    return objective.evaluate(Image<Vec3>(trs.width(), trs.height(), Vec3{0, 0, 1}), depth.z).ratio;
}

inline LossTerms total_loss(const PolarizationStack& stack, const TRSMap& trs, const MixedComponents& mc,
                            const ReflectanceCues& cues, const NormalMap& normals, const DepthMap& depth, double eta,
                            const OptimConfig& config = {}) {
    const ShapeObjective objective(stack, trs, mc, cues, config, eta);
    return objective.evaluate(normals.n, depth.z);
}

// ---------------------------------------------------------------------------
// Parameterization and optimization

/// Two unconstrained values per pixel mapped onto the open upper
/// hemisphere: n = (p, q, 1) / |(p, q, 1)|.
struct ShapeParams {
    Plane p, q;
    Plane z;

    [[nodiscard]] int width() const { return z.width(); }
    [[nodiscard]] int height() const { return z.height(); }
};

inline Vec3 normal_from_params(double p, double q) {
    const double inv = 1.0 / std::sqrt(p * p + q * q + 1.0);
    return {p * inv, q * inv, inv};
}

inline Image<Vec3> params_normals(const ShapeParams& s) {
    Image<Vec3> out(s.width(), s.height());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = normal_from_params(s.p[i], s.q[i]);
    return out;
}

inline ShapeParams params_from_shape(const NormalMap& normals, const DepthMap& depth) {
    require_same_shape(normals.n, depth.z, "params_from_shape");
    ShapeParams s{Plane(depth.width(), depth.height()), Plane(depth.width(), depth.height()), depth.z};
    for (std::size_t i = 0; i < s.p.size(); ++i) {
        const Vec3& n = normals.n[i];
        const double nz = std::max(n.z, 1e-12);
        s.p[i] = n.x / nz;
        s.q[i] = n.y / nz;
    }
    return s;
}

/// Loss and gradient with respect to (p, q, z).
inline LossTerms evaluate_params(const ShapeObjective& objective, const ShapeParams& s, ShapeParams* grad) {
    const auto normals = params_normals(s);
    if (!grad) return objective.evaluate(normals, s.z);
    LossGradient g;
    const LossTerms t = objective.evaluate(normals, s.z, &g);
    *grad = ShapeParams{Plane(s.width(), s.height()), Plane(s.width(), s.height()), std::move(g.dz)};
    for (std::size_t i = 0; i < s.p.size(); ++i) {
        const Vec3& n = normals[i];
        const Vec3& gn = g.dn[i];
        const double inv_len = n.z;  // 1 / |(p, q, 1)|
        const double radial = dot(gn, n);
        grad->p[i] = (gn.x - radial * n.x) * inv_len;
        grad->q[i] = (gn.y - radial * n.y) * inv_len;
    }
    return t;
}

/// Chooses, per pixel, between the leading prior candidate and its
/// azimuth-flipped partner so that normals point away from the centroid
/// of the polarized region (convex-object assumption).
inline NormalMap select_convex_prior(const NormalPriorSet& priors) {
    const NormalMap& first = priors.candidates.at(0);
    const NormalMap& flipped = priors.candidates.at(1);
    const int w = first.width();
    const int h = first.height();
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!first.valid(x, y)) continue;
            const double weight = 1.0 - first.n(x, y).z * first.n(x, y).z;
            sw += weight;
            sx += weight * x;
            sy += weight * y;
        }
    }
    const double cx = sw > 0.0 ? sx / sw : 0.5 * (w - 1);
    const double cy = sw > 0.0 ? sy / sw : 0.5 * (h - 1);
    NormalMap out = first;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!first.valid(x, y)) {
                out.n(x, y) = {0.0, 0.0, 1.0};
                continue;
            }
            const Vec3& n = first.n(x, y);
            if (n.x * (x - cx) + n.y * (y - cy) < 0.0) out.n(x, y) = flipped.n(x, y);
        }
    }
    return out;
}

/// Measurement-derived quantities shared by the optimizer stages.
struct Preprocessed {
    TRSMap trs;
    MixedComponents mc;
    ReflectanceCues cues;
};

inline Preprocessed preprocess(const PolarizationStack& stack, double a_floor = kDefaultAFloor,
                               const SeparationConfig& separation = {}) {
    Preprocessed out;
    out.trs = fit_trs(stack, a_floor);
    out.mc = separate(out.trs, separation);
    out.cues = reflectance_cues(out.mc, out.trs, a_floor);
    return out;
}

/// Prior-based normals and a depth integrated from them.
inline ShapeParams initial_shape(const Preprocessed& pre, double eta) {
    const auto priors = normal_priors(pre.trs, pre.cues, eta);
    NormalMap normals = select_convex_prior(priors);
    const DepthMap depth = integrate_normals(normals);
    return params_from_shape(normals, depth);
}

/// Adaptive-moment descent over (p, q, z) with step decay, alternating
/// with refractive-index re-estimation every ceil(iters / rounds) steps.
inline ShapeEstimate optimize_shape(const PolarizationStack& stack, const Preprocessed& pre, ShapeParams params,
                                    const OptimConfig& config) {
    config.validate();
    ShapeObjective objective(stack, pre.trs, pre.mc, pre.cues, config, config.eta_init);
    const Mask usable = usable_pixels(pre.trs);
    const std::size_t n = params.z.size();

    auto pack = [n](const ShapeParams& s, std::vector<double>& v) {
        v.resize(3 * n);
        std::copy(s.p.pixels().begin(), s.p.pixels().end(), v.begin());
        std::copy(s.q.pixels().begin(), s.q.pixels().end(), v.begin() + static_cast<std::ptrdiff_t>(n));
        std::copy(s.z.pixels().begin(), s.z.pixels().end(), v.begin() + static_cast<std::ptrdiff_t>(2 * n));
    };
    auto unpack = [n](const std::vector<double>& v, ShapeParams& s) {
        std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n), s.p.pixels().begin());
        std::copy(v.begin() + static_cast<std::ptrdiff_t>(n), v.begin() + static_cast<std::ptrdiff_t>(2 * n),
                  s.q.pixels().begin());
        std::copy(v.begin() + static_cast<std::ptrdiff_t>(2 * n), v.end(), s.z.pixels().begin());
    };

    ShapeEstimate result;
    result.eta = {config.eta_init, 0.0, config.eta_bracket, 0};
    std::vector<double> x, g, m(3 * n, 0.0), v(3 * n, 0.0);
    pack(params, x);
    const int period = config.outer_eta_rounds > 0
                           ? (config.iters + config.outer_eta_rounds - 1) / config.outer_eta_rounds
                           : config.iters + 1;

    auto reestimate_eta = [&](const ShapeParams& s) {
        NormalMap current{params_normals(s), pre.trs.valid};
        result.eta = estimate_eta(zenith_plane(current), pre.mc, pre.cues, usable, config.eta_bracket);
        objective.set_eta(result.eta.eta_opt);
    };

    ShapeParams grad;
    double b1t = 1.0, b2t = 1.0;
    for (int t = 0; t < config.iters; ++t) {
        if (t > 0 && t % period == 0) reestimate_eta(params);
        const LossTerms terms = evaluate_params(objective, params, &grad);
        if (!std::isfinite(terms.total)) {
            std::ostringstream msg;
            msg << "optimize_shape: non-finite loss at iteration " << t << " (rec=" << terms.rec
                << " geo=" << terms.geo << " ratio=" << terms.ratio << " eta=" << objective.eta() << ")";
            throw NumericalError(msg.str());
        }
        result.loss_trace.push_back(terms);
        pack(grad, g);
        const double lr = config.lr * std::pow(config.lr_decay, t / config.lr_decay_every);
        b1t *= config.beta1;
        b2t *= config.beta2;
        for (std::size_t i = 0; i < x.size(); ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            const double mh = m[i] / (1.0 - b1t);
            const double vh = v[i] / (1.0 - b2t);
            x[i] -= lr * mh / (std::sqrt(vh) + config.adam_epsilon);
        }
        unpack(x, params);
    }
    if (config.outer_eta_rounds > 0) reestimate_eta(params);

    result.normals = {params_normals(params), pre.trs.valid};
    result.depth = {params.z};
    return result;
}

/// Full pipeline: fit, separate, cues, prior initialization, optimization.
inline ShapeEstimate optimize_shape(const PolarizationStack& stack, const OptimConfig& config = {}) {
    config.validate();
    const Preprocessed pre = preprocess(stack, config.a_floor);
    return optimize_shape(stack, pre, initial_shape(pre, config.eta_init), config);
}

}  // namespace sfp
