#pragma once

#include <cstdint>
#include <ostream>
#include <string>

#include "stereosr/degradation.hpp"
#include "stereosr/discriminator.hpp"
#include "stereosr/generator.hpp"

namespace stereosr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitInvalid = 2;

/// A synthesis job: HR pairs under <input_dir>/{left,right}/ with matching
/// filenames; LR pairs and degradation.jsonl written under output_dir.
struct JobManifest {
  std::string input_dir;
  std::string output_dir;
  DegradationConfig config;
  std::uint64_t master_seed = 0;
  int workers = 1;
};

/// Per-pair seed = master seed xor pair index; output bytes are identical
/// for any worker count.
int run_synth(const JobManifest& manifest, std::ostream& log);

struct EvalOptions {
  int d_max = 64;
  int window = 9;
};

/// Writes per-pair and summary PSNR/SSIM/MADE CSV rows to `csv`.
int run_eval(const std::string& sr_dir, const std::string& hr_dir,
             const EvalOptions& opts, std::ostream& csv, std::ostream& log);

int run_forward(const std::string& lr_dir, const GeneratorConfig& cfg,
                const std::string& out_dir, std::ostream& log);

/// Smoke-run: discriminator scalar score per pair, CSV to `out`.
int run_discriminate(const std::string& dir, const DiscriminatorConfig& cfg,
                     std::ostream& out, std::ostream& log);

}  // namespace stereosr
