#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "stereosr/config.hpp"
#include "stereosr/metrics.hpp"
#include "stereosr/pipeline.hpp"

namespace {

using namespace stereosr;

// --ablation SO,VB,VN: exactly the listed switches are enabled.
void apply_ablation(DegradationConfig& cfg, const std::string& spec) {
  std::set<std::string> on;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok != "SO" && tok != "VB" && tok != "VN" && !tok.empty())
      throw CLI::ValidationError("--ablation", "unknown switch " + tok);
    if (!tok.empty()) on.insert(tok);
  }
  cfg.enable_so = on.count("SO") > 0;
  cfg.enable_vb = on.count("VB") > 0;
  cfg.enable_vn = on.count("VN") > 0;
}

DiscVariant parse_variant(const std::string& v) {
  if (v == "a") return DiscVariant::kA;
  if (v == "b") return DiscVariant::kB;
  if (v == "c") return DiscVariant::kC;
  if (v == "d") return DiscVariant::kD;
  throw CLI::ValidationError("--disc-variant", "must be one of a,b,c,d");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereo super-resolution toolkit: dataset synthesis, "
               "generator smoke-runs, and evaluation"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand(
      "synth", "Degrade an HR stereo corpus into an LR dataset");
  std::string synth_in, synth_out, synth_cfg, ablation;
  std::uint64_t seed = 0;
  int workers = 1, scale = 0;
  synth->add_option("input", synth_in, "HR corpus dir with left/ and right/")
      ->required();
  synth->add_option("output", synth_out, "output dataset dir")->required();
  synth->add_option("--config", synth_cfg, "degradation config file");
  synth->add_option("--seed", seed, "master seed");
  synth->add_option("--workers", workers, "worker thread count");
  synth->add_option("--scale", scale, "override scale factor");
  synth->add_option("--ablation", ablation,
                    "comma list of enabled switches out of SO,VB,VN "
                    "(overrides config; empty string disables all)");
  bool ablation_given = false;
  synth->callback([&] { ablation_given = synth->count("--ablation") > 0; });

  // eval
  auto* eval = app.add_subcommand(
      "eval", "PSNR/SSIM/MADE report of an SR corpus against HR");
  std::string eval_sr, eval_hr, eval_csv;
  int d_max = kDefaultDisparityMax, window = kDefaultDisparityWindow;
  eval->add_option("sr_dir", eval_sr, "SR corpus dir")->required();
  eval->add_option("hr_dir", eval_hr, "HR corpus dir")->required();
  eval->add_option("--out", eval_csv, "CSV output path (default stdout)");
  eval->add_option("--dmax", d_max, "disparity search range");
  eval->add_option("--window", window, "block-matching window (odd)");

  // forward
  auto* forward = app.add_subcommand(
      "forward", "Run the seeded-weight generator over an LR corpus");
  std::string fwd_in, fwd_out, fwd_cfg;
  forward->add_option("input", fwd_in, "LR corpus dir")->required();
  forward->add_option("output", fwd_out, "SR output dir")->required();
  forward->add_option("--config", fwd_cfg, "generator config file");

  // discriminate
  auto* disc = app.add_subcommand(
      "discriminate", "Score a stereo corpus with the seeded discriminator");
  std::string disc_in, disc_variant = "d", disc_csv;
  disc->add_option("input", disc_in, "corpus dir")->required();
  disc->add_option("--disc-variant", disc_variant,
                   "discriminator variant: a, b, c, or d");
  disc->add_option("--out", disc_csv, "CSV output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : stereosr::kExitInvalid;
  }

  try {
    if (synth->parsed()) {
      JobManifest m;
      m.input_dir = synth_in;
      m.output_dir = synth_out;
      m.master_seed = seed;
      m.workers = workers;
      if (!synth_cfg.empty()) m.config = load_degradation_config(synth_cfg);
      if (scale > 0) m.config.scale = scale;
      if (ablation_given) apply_ablation(m.config, ablation);
      return run_synth(m, std::cerr);
    }
    if (eval->parsed()) {
      EvalOptions opts{d_max, window};
      if (eval_csv.empty())
        return run_eval(eval_sr, eval_hr, opts, std::cout, std::cerr);
      std::ofstream os(eval_csv);
      if (!os) {
        std::cerr << "error: cannot open " << eval_csv << "\n";
        return kExitInvalid;
      }
      return run_eval(eval_sr, eval_hr, opts, os, std::cerr);
    }
    if (forward->parsed()) {
      GeneratorConfig cfg;
      if (!fwd_cfg.empty()) cfg = load_generator_config(fwd_cfg);
      return run_forward(fwd_in, cfg, fwd_out, std::cerr);
    }
    if (disc->parsed()) {
      DiscriminatorConfig cfg;
      cfg.variant = parse_variant(disc_variant);
      if (disc_csv.empty())
        return run_discriminate(disc_in, cfg, std::cout, std::cerr);
      std::ofstream os(disc_csv);
      if (!os) {
        std::cerr << "error: cannot open " << disc_csv << "\n";
        return kExitInvalid;
      }
      return run_discriminate(disc_in, cfg, os, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}
