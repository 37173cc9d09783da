// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Kept in a header so tests can drive it in-process.

#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gsrobust/gsrobust.hpp"

namespace gsrobust::cli {

#ifdef GSROBUST_VERSION
inline constexpr const char* kVersion = GSROBUST_VERSION;
#else
inline constexpr const char* kVersion = "0.0.0";
#endif

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kFormat = 4,
  kNumeric = 5,
  kContract = 6,
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return kUsage;
    case ErrorKind::io: return kIo;
    case ErrorKind::format:
    case ErrorKind::data: return kFormat;
    case ErrorKind::numeric:
    case ErrorKind::convergence: return kNumeric;
    case ErrorKind::range:
    case ErrorKind::invariant:
    case ErrorKind::contract: return kContract;
  }
  return kContract;
}

/// Everything that determines a run's output; echoed as `#` lines.
struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  std::vector<std::pair<std::string, std::string>> parameters;  // resolved, in a fixed order
  std::uint64_t seed = 0;
  std::string version = kVersion;

  void set(std::string key, std::string value) { parameters.emplace_back(std::move(key), std::move(value)); }

  std::vector<std::string> comment_lines() const {
    std::vector<std::string> lines;
    lines.push_back("gsrobust " + version);
    lines.push_back("command = " + command);
    for (std::size_t i = 0; i < inputs.size(); ++i) lines.push_back("input[" + std::to_string(i) + "] = " + inputs[i]);
    for (const auto& [k, v] : parameters) lines.push_back(k + " = " + v);
    lines.push_back("seed = " + std::to_string(seed));
    return lines;
  }
};

/// Parsed flag values. Defaults here are the documented defaults.
struct Options {
  std::string camera;
  double tau = 0.05;
  double epsilon = 0.0;
  std::size_t samples = SamplingConfig{}.target_count;
  std::uint64_t seed = 0;
  std::string cost = "taylor-sym";
  unsigned threads = 1;
  std::string out;
  std::string orientation = "depth";
  std::string mask_mode = "quantile";
  double tolerance = 1e-6;
  std::size_t max_iter = 10'000;
  std::optional<std::uint64_t> noise_seed;

  // drop-plan
  std::size_t step = 0;
  DropConfig drop;

  // dafe-loss
  LossWeights loss;

  // w2
  std::vector<double> mean_a, mean_b, cov_a, cov_b;

  std::vector<std::string> positional;
};

inline CostKind parse_cost(const std::string& s) {
  if (s == "taylor-sym") return CostKind::taylor_sym;
  if (s == "taylor") return CostKind::taylor_asym;
  if (s == "exact") return CostKind::exact;
  fail(ErrorKind::usage, "--cost must be one of exact, taylor, taylor-sym");
}

/// `x,y,z` inline, otherwise a camera config file.
inline CameraDescriptor resolve_camera(const std::string& text) {
  if (text.empty()) fail(ErrorKind::usage, "--camera is required (x,y,z or a camera config file)");
  if (std::filesystem::is_regular_file(text)) return io::parse_camera_config(io::read_text_file(text));
  try {
    CameraDescriptor cam;
    cam.position = io::parse_vec3(text, ErrorKind::usage);
    return cam;
  } catch (const Error&) {
    fail(ErrorKind::usage, "--camera '" + text + "' is neither x,y,z nor a readable camera config file");
  }
}

inline std::string vec3_text(const Vec3& v) {
  return format_number(v[0]) + "," + format_number(v[1]) + "," + format_number(v[2]);
}

inline Covariance3 covariance_from_values(const std::vector<double>& v, const char* flag) {
  Covariance3 c = Covariance3::Zero();
  if (v.size() == 3) {
    c.diagonal() << v[0], v[1], v[2];
  } else if (v.size() == 6) {  // xx xy xz yy yz zz
    c << v[0], v[1], v[2], v[1], v[3], v[4], v[2], v[4], v[5];
  } else if (v.size() == 9) {
    for (int i = 0; i < 9; ++i) c(i / 3, i % 3) = v[static_cast<std::size_t>(i)];
  } else {
    fail(ErrorKind::usage, std::string(flag) + " takes 3 (diagonal), 6 (upper triangle) or 9 values");
  }
  return c;
}

inline void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
  } else {
    io::write_file_atomic(o.out, text);
  }
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_imr(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.positional.size() < 2) fail(ErrorKind::usage, "imr needs at least two model files");
  const CameraDescriptor camera = resolve_camera(o.camera);
  SamplingConfig sampling;
  sampling.target_count = o.samples;
  sampling.seed = o.seed;
  MixtureDistanceOptions dist;
  dist.epsilon = o.epsilon;
  dist.cost_kind = parse_cost(o.cost);
  dist.tolerance = o.tolerance;
  dist.max_iter = o.max_iter;

  std::vector<GaussianCloud> clouds;
  std::vector<MixtureModel> models;
  std::vector<std::string> labels;
  for (const auto& path : o.positional) {
    clouds.push_back(io::load_splat_ply(path));
    models.push_back(abstract_mixture(clouds.back(), camera, sampling));
    for (const auto& w : models.back().warnings) err << "warning: " << path << ": " << w << "\n";
    labels.push_back(std::filesystem::path(path).filename().string());
  }
  RobustnessReport report = imr_score(models, dist, o.threads);
  if (o.noise_seed) report.sampling_noise = sampling_noise(clouds[0], clouds[1], camera, sampling, *o.noise_seed, dist);

  RunManifest m;
  m.command = "imr";
  m.inputs = o.positional;
  m.seed = o.seed;
  m.set("camera", vec3_text(camera.position));
  m.set("samples", std::to_string(o.samples));
  m.set("strata_fractions", "0.2,0.3,0.5");
  m.set("epsilon", o.epsilon > 0.0 ? format_number(o.epsilon) : "auto");
  m.set("cost", o.cost);
  m.set("tolerance", format_number(o.tolerance));
  m.set("max_iter", std::to_string(o.max_iter));
  if (o.noise_seed) m.set("noise_seed", std::to_string(*o.noise_seed));
  emit(o, format_report_csv(report, labels, m.comment_lines()), out);
  if (!o.out.empty())
    for (const auto& line : report_summary(report)) out << line << "\n";
  return kOk;
}

inline int cmd_w2(const Options& o, std::ostream& out, std::ostream&) {
  GaussianComponent a, b;
  const bool inline_mode = !o.mean_a.empty() || !o.mean_b.empty() || !o.cov_a.empty() || !o.cov_b.empty();
  if (inline_mode) {
    if (!o.positional.empty()) fail(ErrorKind::usage, "w2 takes either inline Gaussians or two PLY files, not both");
    if (o.mean_a.size() != 3 || o.mean_b.size() != 3) fail(ErrorKind::usage, "--mean-a and --mean-b take 3 values");
    if (o.cov_a.empty() || o.cov_b.empty()) fail(ErrorKind::usage, "--cov-a and --cov-b are required");
    a.mean = Vec3(o.mean_a[0], o.mean_a[1], o.mean_a[2]);
    b.mean = Vec3(o.mean_b[0], o.mean_b[1], o.mean_b[2]);
    a.covariance = covariance_from_values(o.cov_a, "--cov-a");
    b.covariance = covariance_from_values(o.cov_b, "--cov-b");
  } else {
    if (o.positional.size() != 2) fail(ErrorKind::usage, "w2 needs two single-splat PLY files or --mean-*/--cov-*");
    GaussianComponent* slots[2] = {&a, &b};
    for (int i = 0; i < 2; ++i) {
      const GaussianCloud cloud = io::load_splat_ply(o.positional[static_cast<std::size_t>(i)]);
      if (cloud.size() != 1)
        fail(ErrorKind::contract, o.positional[static_cast<std::size_t>(i)] + " holds " +
                                      std::to_string(cloud.size()) + " primitives; w2 expects exactly one");
      const auto& p = cloud.primitives[0];
      *slots[i] = {p.position, covariance_from_primitive(p.scale, p.rotation, default_covariance_floor(cloud))};
    }
  }
  const PreparedGaussian pa = prepare(a), pb = prepare(b);
  const double exact = w2_exact(pa, pb);
  const double taylor = w2_taylor(pa, pb);
  const double sym = w2_taylor_sym(pa, pb);
  std::string text = "exact = " + format_number(exact) + "\n" + "taylor = " + format_number(taylor) + "\n" +
                     "taylor-sym = " + format_number(sym) + "\n";
  emit(o, text, out);
  return kOk;
}

inline int cmd_drop_plan(const Options& o, std::ostream& out, std::ostream&) {
  if (o.positional.size() != 1) fail(ErrorKind::usage, "drop-plan needs exactly one model file");
  const CameraDescriptor camera = resolve_camera(o.camera);
  const GaussianCloud cloud = io::load_splat_ply(o.positional[0]);
  const DropPlan plan = make_drop_plan(cloud, camera, o.drop, o.step, o.seed);

  RunManifest m;
  m.command = "drop-plan";
  m.inputs = o.positional;
  m.seed = o.seed;
  m.set("camera", vec3_text(camera.position));
  m.set("step", std::to_string(o.step));
  m.set("total_steps", std::to_string(o.drop.total_steps));
  m.set("r_min", format_number(o.drop.r_min));
  m.set("r_max", format_number(o.drop.r_max));
  m.set("w_depth", format_number(o.drop.w_depth));
  m.set("w_density", format_number(o.drop.w_density));
  m.set("lambda_middle", format_number(o.drop.lambda_middle));
  m.set("lambda_far", format_number(o.drop.lambda_far));
  m.set("k", std::to_string(o.drop.k));
  auto comments = m.comment_lines();
  comments.push_back("dropped = " + std::to_string(plan.dropped()) + " of " + std::to_string(cloud.size()));
  emit(o, format_drop_plan_csv(plan, comments), out);
  if (!o.out.empty())
    out << "rate = " << format_number(plan.rate) << "\ndropped = " << plan.dropped() << "\n";
  return kOk;
}

inline int cmd_dafe_loss(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.positional.size() != 3) fail(ErrorKind::usage, "dafe-loss needs RENDERED TRUTH DEPTH");
  const DepthOrientation orientation =
      o.orientation == "inverse-depth" ? DepthOrientation::inverse_depth : DepthOrientation::depth;
  const FarMaskMode mode = o.mask_mode == "literal" ? FarMaskMode::literal : FarMaskMode::quantile;
  const ImagePlane rendered = io::load_image(std::filesystem::path(o.positional[0]));
  const ImagePlane truth = io::load_image(std::filesystem::path(o.positional[1]));
  const DepthMap depth = io::load_depth_map(std::filesystem::path(o.positional[2]), orientation);
  if (depth.width != rendered.width || depth.height != rendered.height)
    fail(ErrorKind::contract, "depth map is " + std::to_string(depth.width) + "x" + std::to_string(depth.height) +
                                  " but the images are " + std::to_string(rendered.width) + "x" +
                                  std::to_string(rendered.height));
  const FarMask mask = far_mask(depth, o.tau, mode);
  for (const auto& w : mask.warnings) err << "warning: " << w << "\n";
  const LossBreakdown b = total_loss(rendered, truth, mask, o.loss);

  RunManifest m;
  m.command = "dafe-loss";
  m.inputs = o.positional;
  m.seed = o.seed;
  m.set("tau", format_number(o.tau));
  m.set("mask_mode", o.mask_mode);
  m.set("orientation", o.orientation);
  m.set("lambda_ssim", format_number(o.loss.lambda_ssim));
  m.set("lambda_dafe", format_number(o.loss.lambda_dafe));
  m.set("threshold_value", format_number(mask.threshold_value));
  m.set("masked_pixels", std::to_string(mask.count()));
  emit(o, format_loss_csv(b, o.tau, o.loss, m.comment_lines()), out);
  return kOk;
}

inline int cmd_inspect(const Options& o, std::ostream& out, std::ostream&) {
  if (o.positional.size() != 1) fail(ErrorKind::usage, "inspect needs exactly one model file");
  const CameraDescriptor camera = resolve_camera(o.camera);
  const GaussianCloud cloud = io::load_splat_ply(o.positional[0]);
  const DepthStats stats = camera_depths(cloud, camera);
  std::array<std::size_t, 3> layer_counts{};
  for (double d : stats.depths) ++layer_counts[static_cast<int>(layer_of(d, stats))];
  std::vector<double> opacity, scale;
  for (const auto& p : cloud.primitives) {
    opacity.push_back(p.opacity);
    for (int k = 0; k < 3; ++k) scale.push_back(p.scale[k]);
  }
  auto describe = [](const std::string& name, std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return name + ": min = " + format_number(v.front()) + ", median = " +
           format_number(nearest_rank_quantile(v, 1, 2)) + ", max = " + format_number(v.back()) + "\n";
  };
  std::string text;
  text += "file = " + o.positional[0] + "\n";
  text += "count = " + std::to_string(cloud.size()) + "\n";
  text += "camera = " + vec3_text(camera.position) + (camera.label.empty() ? "" : " (" + camera.label + ")") + "\n";
  text += "depth: min = " + format_number(stats.min) + ", max = " + format_number(stats.max) + "\n";
  text += "tertiles: d_near = " + format_number(stats.d_near) + ", d_middle = " + format_number(stats.d_middle) + "\n";
  text += "layers: near = " + std::to_string(layer_counts[0]) + ", middle = " + std::to_string(layer_counts[1]) +
          ", far = " + std::to_string(layer_counts[2]) + "\n";
  text += describe("opacity", opacity);
  text += describe("scale", scale);
  text += "sh_rest_coefficients = " + std::to_string(cloud.primitives[0].rest_color.size()) + "\n";
  emit(o, text, out);
  return kOk;
}

// ---------------------------------------------------------------------------

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Robustness metrics and regularizer plans for Gaussian splat models", "gsrobust"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "key = value file; command-line flags take precedence");
  app.require_subcommand(1);

  // Shared parameters live on the root so one config file can feed every command.
  app.add_option("--camera", o.camera, "Camera position x,y,z or a camera config file")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::Join);
  app.add_option("--tau", o.tau, "Retained far-field fraction")->check(CLI::Range(0.0, 1.0));
  app.add_option("--epsilon", o.epsilon, "Sinkhorn regularization (<= 0: 0.05 x median cost)");
  app.add_option("--samples", o.samples, "Mixture components sampled per model")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--cost", o.cost, "Pairwise cost")->check(CLI::IsMember({"exact", "taylor", "taylor-sym"}));
  app.add_option("--threads", o.threads, "Worker threads for pairwise distances")->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "Output path (default: standard output)");
  app.add_option("--orientation", o.orientation, "Depth map orientation")
      ->check(CLI::IsMember({"depth", "inverse-depth"}));
  app.add_option("--mask-mode", o.mask_mode, "Far-mask rule")->check(CLI::IsMember({"quantile", "literal"}));
  app.add_option("--tolerance", o.tolerance, "Sinkhorn marginal tolerance");
  app.add_option("--max-iter", o.max_iter, "Sinkhorn iteration cap");
  app.add_option("--noise-seed", o.noise_seed, "Also report sampling noise of the first pair under this seed");
  app.add_option("--step", o.step, "Training step for the drop rate");
  app.add_option("--total-steps", o.drop.total_steps, "Steps over which the drop rate ramps");
  app.add_option("--r-min", o.drop.r_min, "Initial drop rate");
  app.add_option("--r-max", o.drop.r_max, "Final drop rate");
  app.add_option("--w-depth", o.drop.w_depth, "Depth weight of the drop score (density gets 1 - w)");
  app.add_option("--lambda-middle", o.drop.lambda_middle, "Middle-layer attenuation");
  app.add_option("--lambda-far", o.drop.lambda_far, "Far-layer attenuation");
  app.add_option("--k", o.drop.k, "Neighbours for the density estimate");
  app.add_option("--lambda-ssim", o.loss.lambda_ssim, "D-SSIM weight");
  app.add_option("--lambda-dafe", o.loss.lambda_dafe, "Far-field L1 weight");
  app.add_option("--mean-a", o.mean_a, "w2: mean of the first Gaussian")->delimiter(',');
  app.add_option("--mean-b", o.mean_b, "w2: mean of the second Gaussian")->delimiter(',');
  app.add_option("--cov-a", o.cov_a, "w2: covariance (3, 6 or 9 values)")->delimiter(',');
  app.add_option("--cov-b", o.cov_b, "w2: covariance (3, 6 or 9 values)")->delimiter(',');

  auto add = [&](const char* name, const char* help, const char* inputs) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    sub->add_option(inputs, o.positional, "Input files");
    return sub;
  };
  auto* imr = add("imr", "Inter-model robustness over two or more models", "models");
  auto* w2 = add("w2", "W2 distances between two Gaussians", "splats");
  auto* drop = add("drop-plan", "Per-primitive dropout plan at a training step", "model");
  auto* dafe = add("dafe-loss", "Loss breakdown for RENDERED TRUTH DEPTH", "images");
  auto* inspect = add("inspect", "Summary statistics of a model", "model");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  o.drop.w_density = 1.0 - o.drop.w_depth;
  try {
    if (imr->parsed()) return cmd_imr(o, out, err);
    if (w2->parsed()) return cmd_w2(o, out, err);
    if (drop->parsed()) return cmd_drop_plan(o, out, err);
    if (dafe->parsed()) return cmd_dafe_loss(o, out, err);
    if (inspect->parsed()) return cmd_inspect(o, out, err);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::bad_alloc&) {
    err << "numeric error: out of memory\n";
    return kNumeric;
  }
  err << "usage error: no command given\n";
  return kUsage;
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace gsrobust::cli
