//  Copyright 2026 The dccf Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

// dccf command line: decompose, fit, apply, adjust, synth, serve.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "dccf/dccf.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kIo = 3, kNumerical = 4 };

void decompose(const std::string& input, const std::string& mode_name, const fs::path& out_dir) {
  const dccf::LossMode mode = dccf::parse_loss_mode(mode_name);
  if (mode == dccf::LossMode::kRgbOnly) throw std::invalid_argument("decompose mode must be standard or smooth");
  const dccf::RgbImage img = dccf::load_image(input);
  fs::create_directories(out_dir);
  if (mode == dccf::LossMode::kSmooth) {
    dccf::save_image(dccf::smooth_value_map(img), out_dir / "value.png");
    dccf::save_image(dccf::smooth_saturation_map(img), out_dir / "saturation.png");
    dccf::save_image(dccf::smooth_hue_map(img), out_dir / "hue.png");
    return;
  }
  dccf::HsvImage hsv = dccf::rgb_to_hsv(img);
  for (double& h : hsv.h.data) h /= dccf::kTwoPi;
  dccf::save_image(hsv.v, out_dir / "value.png");
  dccf::save_image(hsv.s, out_dir / "saturation.png");
  dccf::save_image(hsv.h, out_dir / "hue.png");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep color curve filters: fit, apply and adjust per-pixel color filters"};
  app.require_subcommand(1);

  // decompose
  std::string dec_input, dec_mode = "standard", dec_out = ".";
  auto* dec = app.add_subcommand("decompose", "Write the V, S and H planes of an image");
  dec->add_option("image", dec_input)->required();
  dec->add_option("--mode", dec_mode, "standard or smooth")->check(CLI::IsMember({"standard", "smooth"}));
  dec->add_option("--out-dir", dec_out)->required();

  // fit
  std::string fit_comp, fit_gt, fit_mask, fit_out, fit_report, fit_mode = "smooth", fit_order = "VSH";
  int fit_grid = 64, fit_iters = 500, fit_knots = dccf::kDefaultKnots;
  std::uint64_t fit_seed = 0;
  double fit_step = dccf::FitConfig{}.step;
  bool fit_soft = false;
  auto* fitc = app.add_subcommand("fit", "Fit a filter stack to a composite / ground-truth pair");
  fitc->add_option("composite", fit_comp)->required();
  fitc->add_option("gt", fit_gt)->required();
  fitc->add_option("mask", fit_mask)->required();
  fitc->add_option("--grid", fit_grid, "grid cells per side")->check(CLI::Range(1, 4096));
  fitc->add_option("--mode", fit_mode)->check(CLI::IsMember({"rgb_only", "standard", "smooth"}));
  fitc->add_option("--iters", fit_iters)->check(CLI::Range(1, 1000000));
  fitc->add_option("--seed", fit_seed);
  fitc->add_option("--knots", fit_knots)->check(CLI::Range(1, dccf::kMaxKnots));
  fitc->add_option("--step", fit_step);
  fitc->add_option("--order", fit_order, "stage order, a permutation of VSH");
  fitc->add_flag("--soft", fit_soft, "use the mask as soft weights instead of thresholding");
  fitc->add_option("--out", fit_out)->required();
  fitc->add_option("--report", fit_report);

  // apply
  std::string app_img, app_stack, app_out;
  int app_stage = 4;
  auto* applyc = app.add_subcommand("apply", "Apply a stack at full resolution");
  applyc->add_option("image", app_img)->required();
  applyc->add_option("stack", app_stack)->required();
  applyc->add_option("--stage", app_stage)->check(CLI::Range(1, 4));
  applyc->add_option("--out", app_out)->required();

  // adjust
  std::string adj_img, adj_stack, adj_out, adj_curve;
  std::optional<double> hue_theta, hue_alpha, sat_sigma, sat_alpha, val_alpha;
  auto* adjc = app.add_subcommand("adjust", "Blend user intents into a stack and apply it");
  adjc->add_option("image", adj_img)->required();
  adjc->add_option("stack", adj_stack)->required();
  adjc->add_option("--hue-theta", hue_theta, "degrees")->check(CLI::Range(0.0, 360.0));
  adjc->add_option("--hue-alpha", hue_alpha)->check(CLI::Range(0.0, 1.0));
  adjc->add_option("--sat-sigma", sat_sigma)->check(CLI::Range(-1.0, 1.0));
  adjc->add_option("--sat-alpha", sat_alpha)->check(CLI::Range(0.0, 1.0));
  adjc->add_option("--val-curve", adj_curve, "JSON {\"v_min\": x, \"phis\": [...]}");
  adjc->add_option("--val-alpha", val_alpha)->check(CLI::Range(0.0, 1.0));
  adjc->add_option("--out", adj_out)->required();

  // synth
  std::string syn_gt, syn_mask, syn_out;
  double syn_theta = 0.0, syn_sigma = 0.0, syn_gamma = 1.0;
  auto* sync = app.add_subcommand("synth", "Perturb the foreground of an image to make a test composite");
  sync->add_option("gt", syn_gt)->required();
  sync->add_option("mask", syn_mask)->required();
  sync->add_option("--theta", syn_theta, "hue shift in degrees");
  sync->add_option("--sigma", syn_sigma)->check(CLI::Range(-1.0, 1.0));
  sync->add_option("--gamma", syn_gamma)->check(CLI::PositiveNumber);
  sync->add_option("--out", syn_out)->required();

  // serve
  int srv_port = 8080;
  std::string srv_dir = "sessions", srv_host = "127.0.0.1";
  auto* srv = app.add_subcommand("serve", "Run the HTTP session service");
  srv->add_option("--port", srv_port)->check(CLI::Range(0, 65535));
  srv->add_option("--host", srv_host);
  srv->add_option("--session-dir", srv_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*dec) {
      decompose(dec_input, dec_mode, dec_out);
    } else if (*fitc) {
      dccf::FitConfig cfg;
      cfg.grid_w = cfg.grid_h = fit_grid;
      cfg.mode = dccf::parse_loss_mode(fit_mode);
      cfg.max_iters = fit_iters;
      cfg.seed = fit_seed;
      cfg.knots = fit_knots;
      cfg.step = fit_step;
      cfg.order = dccf::parse_order(fit_order);
      const dccf::RgbImage comp = dccf::load_image(fit_comp);
      const dccf::RgbImage gt = dccf::load_image(fit_gt);
      const dccf::Mask mask = dccf::load_mask(fit_mask, fit_soft);
      const dccf::FitResult r = dccf::fit(comp, gt, mask, cfg);
      dccf::save_stack(r.stack, fit_out);
      if (!fit_report.empty()) dccf::write_file_atomic(fit_report, dccf::report_to_json(r.report).dump(2));
      std::printf("iterations %d  final mse %.6g  psnr %.3f dB  (%.1f s)\n", r.report.iterations_run,
                  r.report.final_mse, r.report.final_psnr, r.report.wall_time);
    } else if (*applyc) {
      const dccf::RgbImage img = dccf::load_image(app_img);
      const dccf::FilterStack stack = dccf::load_stack(app_stack);
      dccf::save_image(dccf::trace_stage(dccf::run_pipeline(img, stack), app_stage), app_out);
    } else if (*adjc) {
      const dccf::RgbImage img = dccf::load_image(adj_img);
      const dccf::FilterStack stack = dccf::load_stack(adj_stack);
      dccf::Adjustment adj;
      if (hue_theta || hue_alpha) adj.hue = dccf::Adjustment::Hue{hue_theta.value_or(0.0), hue_alpha.value_or(0.0)};
      if (sat_sigma || sat_alpha) adj.sat = dccf::Adjustment::Sat{sat_sigma.value_or(0.0), sat_alpha.value_or(0.0)};
      if (!adj_curve.empty()) {
        adj.val = dccf::Adjustment::Val{dccf::load_curve(adj_curve), val_alpha.value_or(0.0)};
      } else if (val_alpha) {
        throw std::invalid_argument("--val-alpha needs --val-curve");
      }
      dccf::save_image(dccf::run_pipeline(img, dccf::apply_adjustment(stack, adj)).i4, adj_out);
    } else if (*sync) {
      const dccf::RgbImage gt = dccf::load_image(syn_gt);
      const dccf::Mask mask = dccf::load_mask(syn_mask);
      dccf::save_image(dccf::synth_perturb(gt, mask, {syn_theta * dccf::kPi / 180.0, syn_sigma, syn_gamma}), syn_out);
    } else if (*srv) {
      dccf::Service service(srv_dir);
      std::printf("listening on %s:%d, sessions in %s\n", srv_host.c_str(), srv_port, srv_dir.c_str());
      std::fflush(stdout);
      if (!service.listen(srv_host, srv_port)) {
        std::fprintf(stderr, "dccf: cannot listen on %s:%d\n", srv_host.c_str(), srv_port);
        return kIo;
      }
    }
  } catch (const dccf::NumericalError& e) {
    std::fprintf(stderr, "dccf: numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const dccf::IoError& e) {
    std::fprintf(stderr, "dccf: %s\n", e.what());
    return kIo;
  } catch (const dccf::FormatError& e) {
    std::fprintf(stderr, "dccf: %s\n", e.what());
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "dccf: %s\n", e.what());
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "dccf: %s\n", e.what());
    return kUsage;
  }
  return kOk;
}
