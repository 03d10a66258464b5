// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

// sfp: command-line front end for the shape-from-polarization pipeline.
//
// Exit status: 0 success, 1 input error, 2 configuration error,
// 3 numerical failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sfp/evaluate.hpp"
#include "sfp/io.hpp"
#include "sfp/sfp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

class Stopwatch {
  public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - start_).count();
        start_ = now;
        return s;
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void write_trs(const fs::path& dir, const sfp::TRSMap& trs) {
    fs::create_directories(dir);
    sfp::io::write_pfm(dir / "A.pfm", trs.A);
    sfp::io::write_pfm(dir / "B.pfm", trs.B);
    sfp::io::write_pfm(dir / "phi.pfm", trs.phi);
    sfp::io::write_pfm(dir / "rho.pfm", trs.rho);
    sfp::io::write_mask_png(dir / "valid.png", trs.valid);
    sfp::io::write_mask_png(dir / "clamped.png", trs.clamped);
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string preset = "sphere";
    int size = 128;
    double tilt_deg = 0.0;
    double eta = 1.5;
    double alpha_d = 1.0;
    double intensity = 0.5;
    double noise = 0.0;
    std::uint64_t seed = 0;
    fs::path out;
};

int run_synth(const SynthArgs& a) {
    sfp::SceneConfig cfg;
    cfg.preset = sfp::parse_preset(a.preset);
    cfg.size = a.size;
    cfg.tilt = sfp::deg2rad(a.tilt_deg);
    cfg.eta = a.eta;
    cfg.alpha_d = a.alpha_d;
    cfg.intensity = a.intensity;
    cfg.noise_sigma = a.noise;
    cfg.seed = a.seed;
    const sfp::SceneBundle b = sfp::make_scene(cfg);
    fs::create_directories(a.out);
    sfp::io::write_stack(a.out / "stack", b.stack);
    sfp::io::write_pfm(a.out / "gt_normals.pfm", b.normals.n);
    sfp::io::write_normals_png(a.out / "gt_normals.png", b.normals.n);
    sfp::io::write_pfm(a.out / "gt_depth.pfm", b.depth.z);
    sfp::io::write_json(a.out / "scene.json", json{{"preset", sfp::preset_name(cfg.preset)},
                                                   {"size", cfg.size},
                                                   {"tilt_deg", a.tilt_deg},
                                                   {"eta", cfg.eta},
                                                   {"alpha_d", cfg.alpha_d},
                                                   {"intensity", cfg.intensity},
                                                   {"noise_sigma", cfg.noise_sigma},
                                                   {"seed", cfg.seed}});
    std::cout << "wrote " << sfp::preset_name(cfg.preset) << " scene (" << cfg.size << "x" << cfg.size << ") to "
              << a.out.string() << "\n";
    return 0;
}

int run_fit(const fs::path& stack_dir, const fs::path& out, double a_floor) {
    const auto stack = sfp::io::read_stack(stack_dir);
    const auto trs = sfp::fit_trs(stack, a_floor);
    write_trs(out, trs);
    std::cout << "fitted " << sfp::count(trs.valid) << " valid pixels, " << sfp::count(trs.clamped) << " clamped\n";
    return 0;
}

int run_separate(const fs::path& stack_dir, const fs::path& out, double a_floor, const sfp::SeparationConfig& sc) {
    const auto stack = sfp::io::read_stack(stack_dir);
    const auto trs = sfp::fit_trs(stack, a_floor);
    const auto mc = sfp::separate(trs, sc);
    const auto cues = sfp::reflectance_cues(mc, trs, a_floor);
    fs::create_directories(out);
    sfp::io::write_pfm(out / "A_d.pfm", mc.A_d);
    sfp::io::write_pfm(out / "A_s.pfm", mc.A_s);
    sfp::io::write_pfm(out / "B_d.pfm", mc.B_d);
    sfp::io::write_pfm(out / "B_s.pfm", mc.B_s);
    sfp::io::write_pfm(out / "rho_d.pfm", mc.rho_d);
    sfp::io::write_pfm(out / "rho_s.pfm", mc.rho_s);
    sfp::io::write_pfm(out / "phi_d.pfm", mc.phi_d);
    sfp::io::write_pfm(out / "phi_s.pfm", mc.phi_s);
    sfp::io::write_sign_png(out / "sign_m.png", mc.sign_m);
    sfp::io::write_pfm(out / "alpha_d.pfm", cues.alpha_d);
    sfp::io::write_pfm(out / "alpha_s.pfm", cues.alpha_s);
    sfp::io::write_json(out / "separation.json", json{{"converged", mc.converged},
                                                      {"iterations", mc.iterations},
                                                      {"objective_trace", mc.objective_trace}});
    std::cout << "separation " << (mc.converged ? "converged" : "stopped") << " after " << mc.iterations
              << " iterations\n";
    return 0;
}

int run_priors(const fs::path& stack_dir, const fs::path& out, double eta, double a_floor) {
    const auto stack = sfp::io::read_stack(stack_dir);
    const auto pre = sfp::preprocess(stack, a_floor);
    const auto priors = sfp::normal_priors(pre.trs, pre.cues, eta);
    fs::create_directories(out);
    for (std::size_t k = 0; k < priors.candidates.size(); ++k) {
        const std::string stem = "prior_" + std::to_string(k);
        sfp::io::write_pfm(out / (stem + ".pfm"), priors.candidates[k].n);
        sfp::io::write_normals_png(out / (stem + ".png"), priors.candidates[k].n);
    }
    sfp::io::write_mask_png(out / "diffuse_first.png", priors.diffuse_first);
    sfp::io::write_mask_png(out / "saturated.png", priors.saturated);
    std::cout << "wrote " << priors.candidates.size() << " candidate normal fields\n";
    return 0;
}

json eta_json(const sfp::EtaEstimate& e) {
    return json{{"eta_opt", e.eta_opt},
                {"residual", e.residual},
                {"bracket", {e.bracket.lo, e.bracket.hi}},
                {"n_pixels", e.n_pixels}};
}

int run_estimate_eta(const fs::path& stack_dir, const fs::path& normals_path, const std::optional<fs::path>& out,
                     sfp::EtaBracket bracket, double a_floor) {
    const auto stack = sfp::io::read_stack(stack_dir);
    const auto pre = sfp::preprocess(stack, a_floor);
    const sfp::NormalMap normals{sfp::io::read_pfm3(normals_path), pre.trs.valid};
    sfp::require_same_shape(normals.n, pre.trs.A, "estimate-eta");
    const auto est = sfp::estimate_eta(sfp::zenith_plane(normals), pre.mc, pre.cues, sfp::usable_pixels(pre.trs),
                                       bracket);
    const json j = eta_json(est);
    if (out) sfp::io::write_json(*out, j);
    std::cout << j.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct OptimOverrides {
    std::optional<fs::path> config_file;
    std::optional<double> lambda1, lambda2, lambda3, lambda_geo, lambda_ratio;
    std::optional<int> iters;
    std::optional<double> lr, lr_decay;
    std::optional<int> lr_decay_every;
    std::optional<double> beta1, beta2, adam_epsilon;
    std::optional<double> eta_init;
    std::optional<int> outer_eta_rounds;
    std::optional<double> eta_lo, eta_hi;
    std::optional<double> a_floor;
};

void apply_config_json(const json& j, sfp::OptimConfig& c) {
    static const char* known[] = {"lambda1", "lambda2",      "lambda3",  "lambda_geo",       "lambda_ratio",
                                  "iters",   "lr",           "lr_decay", "lr_decay_every",   "beta1",
                                  "beta2",   "adam_epsilon", "eta_init", "outer_eta_rounds", "eta_lo",
                                  "eta_hi",  "a_floor"};
    if (!j.is_object()) throw sfp::ConfigError("optimizer config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
            throw sfp::ConfigError("unknown optimizer config key '" + key + "'");
        }
        if (!value.is_number()) throw sfp::ConfigError("optimizer config key '" + key + "' must be a number");
    }
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    get("lambda1", c.lambda1);
    get("lambda2", c.lambda2);
    get("lambda3", c.lambda3);
    get("lambda_geo", c.lambda_geo);
    get("lambda_ratio", c.lambda_ratio);
    get("iters", c.iters);
    get("lr", c.lr);
    get("lr_decay", c.lr_decay);
    get("lr_decay_every", c.lr_decay_every);
    get("beta1", c.beta1);
    get("beta2", c.beta2);
    get("adam_epsilon", c.adam_epsilon);
    get("eta_init", c.eta_init);
    get("outer_eta_rounds", c.outer_eta_rounds);
    get("eta_lo", c.eta_bracket.lo);
    get("eta_hi", c.eta_bracket.hi);
    get("a_floor", c.a_floor);
}

sfp::OptimConfig resolve_config(const OptimOverrides& o) {
    sfp::OptimConfig c;
    if (o.config_file) apply_config_json(sfp::io::read_json(*o.config_file), c);
    auto set = [](const auto& opt, auto& field) {
        if (opt) field = *opt;
    };
    set(o.lambda1, c.lambda1);
    set(o.lambda2, c.lambda2);
    set(o.lambda3, c.lambda3);
    set(o.lambda_geo, c.lambda_geo);
    set(o.lambda_ratio, c.lambda_ratio);
    set(o.iters, c.iters);
    set(o.lr, c.lr);
    set(o.lr_decay, c.lr_decay);
    set(o.lr_decay_every, c.lr_decay_every);
    set(o.beta1, c.beta1);
    set(o.beta2, c.beta2);
    set(o.adam_epsilon, c.adam_epsilon);
    set(o.eta_init, c.eta_init);
    set(o.outer_eta_rounds, c.outer_eta_rounds);
    set(o.eta_lo, c.eta_bracket.lo);
    set(o.eta_hi, c.eta_bracket.hi);
    set(o.a_floor, c.a_floor);
    c.validate();
    if (!(c.eta_bracket.lo > 1.0 && c.eta_bracket.lo < c.eta_bracket.hi && c.eta_bracket.hi <= 3.0)) {
        throw sfp::ConfigError("eta bracket must satisfy 1 < lo < hi <= 3");
    }
    return c;
}

void add_optim_flags(CLI::App* cmd, OptimOverrides& o) {
    cmd->add_option("--config", o.config_file, "JSON file overriding optimizer fields");
    cmd->add_option("--lambda1", o.lambda1, "intensity reconstruction weight");
    cmd->add_option("--lambda2", o.lambda2, "DoP weight");
    cmd->add_option("--lambda3", o.lambda3, "AoP weight");
    cmd->add_option("--lambda-geo", o.lambda_geo, "depth/normal consistency weight");
    cmd->add_option("--lambda-ratio", o.lambda_ratio, "polarizer-ratio constraint weight");
    cmd->add_option("--iters", o.iters, "optimizer iterations");
    cmd->add_option("--lr", o.lr, "initial learning rate");
    cmd->add_option("--lr-decay", o.lr_decay, "learning-rate decay factor");
    cmd->add_option("--lr-decay-every", o.lr_decay_every, "iterations between decays");
    cmd->add_option("--beta1", o.beta1, "first-moment decay");
    cmd->add_option("--beta2", o.beta2, "second-moment decay");
    cmd->add_option("--adam-epsilon", o.adam_epsilon, "moment denominator guard");
    cmd->add_option("--eta-init", o.eta_init, "initial refractive index");
    cmd->add_option("--outer-eta-rounds", o.outer_eta_rounds, "refractive-index re-estimation rounds");
    cmd->add_option("--eta-lo", o.eta_lo, "lower refractive-index bound");
    cmd->add_option("--eta-hi", o.eta_hi, "upper refractive-index bound");
    cmd->add_option("--a-floor", o.a_floor, "minimum intensity of a valid pixel");
}

int run_reconstruct(const fs::path& stack_dir, const fs::path& out, const OptimOverrides& overrides) {
    const sfp::OptimConfig config = resolve_config(overrides);
    Stopwatch clock;
    const auto stack = sfp::io::read_stack(stack_dir);
    const double t_load = clock.lap();
    const auto pre = sfp::preprocess(stack, config.a_floor);
    const double t_pre = clock.lap();
    auto init = sfp::initial_shape(pre, config.eta_init);
    const double t_init = clock.lap();
    const auto est = sfp::optimize_shape(stack, pre, std::move(init), config);
    const double t_opt = clock.lap();

    fs::create_directories(out);
    sfp::io::write_pfm(out / "normals.pfm", est.normals.n);
    sfp::io::write_normals_png(out / "normals.png", est.normals.n);
    sfp::io::write_pfm(out / "depth.pfm", est.depth.z);
    sfp::io::write_json(out / "eta.json", eta_json(est.eta));
    sfp::io::write_json(out / "timings.json",
                        json{{"load", t_load}, {"preprocess", t_pre}, {"initialize", t_init}, {"optimize", t_opt}});
    std::ofstream trace(out / "loss_trace.csv");
    if (!trace) throw sfp::InputError("cannot write loss_trace.csv");
    trace << "iteration,L_rec,L_geo,L_ratio,L_total\n";
    trace.precision(17);
    for (std::size_t t = 0; t < est.loss_trace.size(); ++t) {
        const auto& l = est.loss_trace[t];
        trace << t << "," << l.rec << "," << l.geo << "," << l.ratio << "," << l.total << "\n";
    }
    std::cout << "reconstructed " << stack.width() << "x" << stack.height() << " in " << config.iters
              << " iterations, eta = " << est.eta.eta_opt << ", final loss = " << est.loss_trace.back().total << "\n";
    return 0;
}

int run_eval(const fs::path& rec, const fs::path& scene, bool as_json, const std::optional<fs::path>& out) {
    Stopwatch clock;
    const auto stack = sfp::io::read_stack(scene / "stack");
    const json meta = sfp::io::read_json(scene / "scene.json");
    const sfp::NormalMap gt{sfp::io::read_pfm3(scene / "gt_normals.pfm"), sfp::Mask()};
    const sfp::NormalMap est{sfp::io::read_pfm3(rec / "normals.pfm"), sfp::Mask()};
    if (!est.n.same_shape(gt.n) || !est.n.same_shape(stack.image(0))) {
        throw sfp::EvalError("eval: reconstruction is " + std::to_string(est.width()) + "x" +
                             std::to_string(est.height()) + " but the scene is " + std::to_string(gt.width()) + "x" +
                             std::to_string(gt.height()));
    }
    double eta = 1.5;
    if (fs::exists(rec / "eta.json")) eta = sfp::io::read_json(rec / "eta.json").value("eta_opt", 1.5);
    const double alpha_d = meta.value("alpha_d", 1.0);
    const auto trs = sfp::fit_trs(stack);
    sfp::EvalReport report = sfp::evaluate(est, eta, gt, stack, sfp::Plane(stack.width(), stack.height(), alpha_d),
                                           sfp::evaluation_mask(trs.valid));
    if (fs::exists(rec / "timings.json")) {
        const json timings = sfp::io::read_json(rec / "timings.json");
        for (const auto& [k, v] : timings.items()) {
            if (v.is_number()) report.timings[k] = v.get<double>();
        }
    }
    report.timings["eval"] = clock.lap();
    const json j = report;
    if (out) sfp::io::write_json(*out, j);
    if (as_json) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "mae_deg      " << report.mae_deg << "\n"
                  << "aop_mae_deg  " << report.aop_mae_deg << "\n"
                  << "dop_ssim     " << report.dop_ssim << "\n"
                  << "stack_ssim   " << report.stack_ssim << "\n"
                  << "n_valid      " << report.n_valid << "\n";
    }
    return 0;
}

/// Sphere-and-background stack of arbitrary size for timing runs.
sfp::PolarizationStack bench_stack(int width, int height, std::uint64_t seed) {
    sfp::Plane z(width, height);
    const double cx = 0.5 * (width - 1), cy = 0.5 * (height - 1);
    const double r = 0.4 * std::min(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            z(x, y) = std::sqrt(std::max(r * r - d2, 0.0));
        }
    }
    const auto normals = sfp::normals_from_depth({z});
    return sfp::render_polarization(normals, 1.5, sfp::Plane(width, height, 0.8), sfp::Plane(width, height, 0.5),
                                    sfp::PolarizationStack::canonical_angles(), 0.005, seed);
}

int run_bench(int width, int height, int repeat, std::uint64_t seed, bool as_json) {
    if (width < 2 || height < 2 || repeat < 1) throw sfp::ConfigError("bench: invalid size or repeat count");
    const auto stack = bench_stack(width, height, seed);
    double best_fit = 1e300, best_sep = 1e300, best_cues = 1e300, best_priors = 1e300, best_pre = 1e300;
    for (int r = 0; r < repeat; ++r) {
        Stopwatch clock;
        const auto trs = sfp::fit_trs(stack);
        const double t_fit = clock.lap();
        const auto mc = sfp::separate(trs);
        const double t_sep = clock.lap();
        const auto cues = sfp::reflectance_cues(mc, trs);
        const double t_cues = clock.lap();
        const auto priors = sfp::normal_priors(trs, cues, 1.5);
        const double t_priors = clock.lap();
        best_fit = std::min(best_fit, t_fit);
        best_sep = std::min(best_sep, t_sep);
        best_cues = std::min(best_cues, t_cues);
        best_priors = std::min(best_priors, t_priors);
        best_pre = std::min(best_pre, t_fit + t_sep + t_cues);
    }
    const json j{{"width", width},         {"height", height},           {"threads", sfp::max_threads()},
                 {"fit_s", best_fit},      {"separate_s", best_sep},     {"cues_s", best_cues},
                 {"priors_s", best_priors}, {"preprocess_s", best_pre},  {"repeat", repeat}};
    if (as_json) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "stack " << width << "x" << height << ", " << sfp::max_threads() << " thread(s)\n"
                  << "fit               " << best_fit << " s\n"
                  << "separate          " << best_sep << " s\n"
                  << "reflectance_cues  " << best_cues << " s\n"
                  << "normal_priors     " << best_priors << " s\n"
                  << "preprocess total  " << best_pre << " s\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shape from polarization: fitting, separation, refractive index and shape recovery"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "maximum worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "render a synthetic scene bundle");
    c_synth->add_option("--preset", synth.preset, "sphere | plane | sinusoid | gaussian_bump");
    c_synth->add_option("--size", synth.size, "image side length in pixels");
    c_synth->add_option("--tilt", synth.tilt_deg, "plane tilt in degrees");
    c_synth->add_option("--eta", synth.eta, "refractive index");
    c_synth->add_option("--alpha-d", synth.alpha_d, "diffuse fraction of the intensity");
    c_synth->add_option("--intensity", synth.intensity, "unpolarized intensity");
    c_synth->add_option("--noise", synth.noise, "Gaussian intensity noise std");
    c_synth->add_option("--seed", synth.seed, "noise seed");
    c_synth->add_option("--out", synth.out, "output directory")->required();

    fs::path stack_dir, out_dir, normals_path, rec_dir, scene_dir;
    double a_floor = sfp::kDefaultAFloor;
    double eta = 1.5;

    auto* c_fit = app.add_subcommand("fit", "fit the per-pixel sinusoid");
    c_fit->add_option("stack", stack_dir, "stack directory")->required();
    c_fit->add_option("--out", out_dir, "output directory")->required();
    c_fit->add_option("--a-floor", a_floor, "minimum intensity of a valid pixel");

    sfp::SeparationConfig sep;
    auto* c_sep = app.add_subcommand("separate", "split diffuse and specular components");
    c_sep->add_option("stack", stack_dir, "stack directory")->required();
    c_sep->add_option("--out", out_dir, "output directory")->required();
    c_sep->add_option("--a-floor", a_floor, "minimum intensity of a valid pixel");
    c_sep->add_option("--max-iters", sep.max_iters, "alternating least-squares iterations");
    c_sep->add_option("--tol", sep.tol, "relative objective decrease for convergence");

    auto* c_priors = app.add_subcommand("priors", "physics-based normal candidates");
    c_priors->add_option("stack", stack_dir, "stack directory")->required();
    c_priors->add_option("--out", out_dir, "output directory")->required();
    c_priors->add_option("--eta", eta, "refractive index");
    c_priors->add_option("--a-floor", a_floor, "minimum intensity of a valid pixel");

    sfp::EtaBracket bracket;
    std::optional<fs::path> eta_out;
    auto* c_eta = app.add_subcommand("estimate-eta", "refractive index for a given normal field");
    c_eta->add_option("stack", stack_dir, "stack directory")->required();
    c_eta->add_option("--normals", normals_path, "3-channel PFM normal field")->required();
    c_eta->add_option("--out", eta_out, "output JSON file");
    c_eta->add_option("--eta-lo", bracket.lo, "lower bound");
    c_eta->add_option("--eta-hi", bracket.hi, "upper bound");
    c_eta->add_option("--a-floor", a_floor, "minimum intensity of a valid pixel");

    OptimOverrides overrides;
    auto* c_rec = app.add_subcommand("reconstruct", "recover normals, depth and refractive index");
    c_rec->add_option("stack", stack_dir, "stack directory")->required();
    c_rec->add_option("--out", out_dir, "output directory")->required();
    add_optim_flags(c_rec, overrides);

    bool as_json = false;
    std::optional<fs::path> report_out;
    auto* c_eval = app.add_subcommand("eval", "score a reconstruction against a synthetic scene");
    c_eval->add_option("rec", rec_dir, "reconstruction directory")->required();
    c_eval->add_option("scene", scene_dir, "scene directory")->required();
    c_eval->add_flag("--json", as_json, "print the report as JSON");
    c_eval->add_option("--out", report_out, "also write the JSON report here");

    int bench_w = 1224, bench_h = 1024, bench_repeat = 3;
    std::uint64_t bench_seed = 0;
    auto* c_bench = app.add_subcommand("bench", "time the preprocessing stages");
    c_bench->add_option("--width", bench_w, "stack width");
    c_bench->add_option("--height", bench_h, "stack height");
    c_bench->add_option("--repeat", bench_repeat, "repetitions (best time is reported)");
    c_bench->add_option("--seed", bench_seed, "noise seed");
    c_bench->add_flag("--json", as_json, "print JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kExitInput;
    }

    try {
        sfp::set_max_threads(threads);
        if (*c_synth) return run_synth(synth);
        if (*c_fit) return run_fit(stack_dir, out_dir, a_floor);
        if (*c_sep) return run_separate(stack_dir, out_dir, a_floor, sep);
        if (*c_priors) return run_priors(stack_dir, out_dir, eta, a_floor);
        if (*c_eta) return run_estimate_eta(stack_dir, normals_path, eta_out, bracket, a_floor);
        if (*c_rec) return run_reconstruct(stack_dir, out_dir, overrides);
        if (*c_eval) return run_eval(rec_dir, scene_dir, as_json, report_out);
        if (*c_bench) return run_bench(bench_w, bench_h, bench_repeat, bench_seed, as_json);
    } catch (const sfp::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const sfp::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const sfp::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    }
    std::cerr << app.help();
    return kExitInput;
}
