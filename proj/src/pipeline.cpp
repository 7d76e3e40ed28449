#include "stereosr/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>
#include <vector>

#include "stereosr/image_io.hpp"
#include "stereosr/metrics.hpp"
#include "stereosr/weights_io.hpp"

namespace stereosr {

namespace fs = std::filesystem;

namespace {

// Matching left/right filenames, sorted for stable pair indices.
std::vector<std::string> list_pairs(const std::string& dir,
                                    std::ostream& log) {
  const fs::path left = fs::path(dir) / "left";
  const fs::path right = fs::path(dir) / "right";
  if (!fs::is_directory(left) || !fs::is_directory(right)) return {};
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(left)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png")
      continue;
    const std::string name = entry.path().filename().string();
    if (fs::is_regular_file(right / name)) {
      names.push_back(name);
    } else {
      log << "warning: no right image for " << name << ", skipping\n";
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

StereoPair load_pair(const std::string& dir, const std::string& name) {
  return StereoPair(read_png((fs::path(dir) / "left" / name).string()),
                    read_png((fs::path(dir) / "right" / name).string()));
}

void for_each_index(int count, int workers, auto&& fn) {
  workers = std::max(1, workers);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (std::thread& th : pool) th.join();
}

}  // namespace

int run_synth(const JobManifest& manifest, std::ostream& log) {
  manifest.config.validate();
  const std::vector<std::string> names = list_pairs(manifest.input_dir, log);
  if (names.empty()) {
    log << "error: no pairs found\n";
    return kExitPartial;
  }

  fs::create_directories(fs::path(manifest.output_dir) / "left");
  fs::create_directories(fs::path(manifest.output_dir) / "right");

  struct Slot {
    bool ok = false;
    StereoPair lr;
    std::string record_line;
    std::string error;
  };
  std::vector<Slot> slots(names.size());

  for_each_index(static_cast<int>(names.size()), manifest.workers,
                 [&](int i) {
                   Slot& slot = slots[static_cast<size_t>(i)];
                   try {
                     const StereoPair hr =
                         load_pair(manifest.input_dir, names[i]);
                     const std::uint64_t seed =
                         manifest.master_seed ^ static_cast<std::uint64_t>(i);
                     DegradeResult res =
                         degrade_pair(hr, manifest.config, seed);
                     slot.lr = std::move(res.pair);
                     slot.record_line = res.record.to_jsonl();
                     slot.ok = true;
                   } catch (const std::exception& e) {
                     slot.error = e.what();
                   }
                 });

  std::ofstream records(fs::path(manifest.output_dir) / "degradation.jsonl");
  int written = 0;
  for (size_t i = 0; i < names.size(); ++i) {
    if (!slots[i].ok) {
      log << "warning: skipped " << names[i] << ": " << slots[i].error
          << "\n";
      continue;
    }
    write_png((fs::path(manifest.output_dir) / "left" / names[i]).string(),
              slots[i].lr.left);
    write_png((fs::path(manifest.output_dir) / "right" / names[i]).string(),
              slots[i].lr.right);
    records << slots[i].record_line << "\n";
    ++written;
  }
  if (written == 0) {
    log << "error: all pairs skipped\n";
    return kExitPartial;
  }
  return written == static_cast<int>(names.size()) ? kExitOk : kExitPartial;
}

int run_eval(const std::string& sr_dir, const std::string& hr_dir,
             const EvalOptions& opts, std::ostream& csv, std::ostream& log) {
  const std::vector<std::string> names = list_pairs(sr_dir, log);
  if (names.empty()) {
    log << "error: no pairs found\n";
    return kExitPartial;
  }

  csv << "pair,psnr,ssim,made,valid_fraction\n";
  double sum_psnr = 0, sum_ssim = 0, sum_made = 0, sum_valid = 0;
  bool psnr_inf = false;
  int ok = 0, failed = 0;
  for (const std::string& name : names) {
    try {
      const StereoPair sr = load_pair(sr_dir, name);
      const StereoPair hr = load_pair(hr_dir, name);
      require_same_shape(sr.left, hr.left, "eval");

      // PSNR over both eyes jointly.
      const double mse =
          ((sr.left.data() - hr.left.data()).squaredNorm() +
           (sr.right.data() - hr.right.data()).squaredNorm()) /
          static_cast<double>(sr.left.size() + sr.right.size());
      const double psnr = mse == 0.0
                              ? std::numeric_limits<double>::infinity()
                              : 10.0 * std::log10(1.0 / mse);
      const double s =
          0.5 * (ssim(sr.left, hr.left) + ssim(sr.right, hr.right));
      const MadeResult m = made_detailed(sr, hr, opts.d_max, opts.window);

      csv << name << "," << psnr << "," << s << "," << m.error << ","
          << m.valid_fraction << "\n";
      if (std::isinf(psnr))
        psnr_inf = true;
      else
        sum_psnr += psnr;
      sum_ssim += s;
      sum_made += m.error;
      sum_valid += m.valid_fraction;
      ++ok;
    } catch (const std::exception& e) {
      csv << name << ",error,error,error,error\n";
      log << "error: pair " << name << ": " << e.what() << "\n";
      ++failed;
    }
  }
  if (ok > 0) {
    csv << "mean," << (psnr_inf ? std::numeric_limits<double>::infinity()
                                : sum_psnr / ok)
        << "," << sum_ssim / ok << "," << sum_made / ok << ","
        << sum_valid / ok << "\n";
  }
  return failed == 0 ? kExitOk : kExitPartial;
}

int run_forward(const std::string& lr_dir, const GeneratorConfig& cfg,
                const std::string& out_dir, std::ostream& log) {
  cfg.validate();
  const std::vector<std::string> names = list_pairs(lr_dir, log);
  if (names.empty()) {
    log << "error: no pairs found\n";
    return kExitPartial;
  }
  fs::create_directories(fs::path(out_dir) / "left");
  fs::create_directories(fs::path(out_dir) / "right");

  const GeneratorWeights weights = GeneratorWeights::build(cfg);
  write_weights((fs::path(out_dir) / "weights.bin").string(),
                weights.to_blobs());

  int failed = 0;
  for (const std::string& name : names) {
    try {
      const StereoPair lr = load_pair(lr_dir, name);
      const long out_pixels = static_cast<long>(lr.left.height()) *
                              lr.left.width() * cfg.scale * cfg.scale;
      if (out_pixels > 16L * 1024 * 1024) {
        log << "error: pair " << name << ": output of " << out_pixels
            << " pixels exceeds the size guard\n";
        ++failed;
        continue;
      }
      const StereoPair sr = generator_forward(lr, cfg, weights);
      write_png((fs::path(out_dir) / "left" / name).string(), sr.left);
      write_png((fs::path(out_dir) / "right" / name).string(), sr.right);
    } catch (const std::exception& e) {
      log << "error: pair " << name << ": " << e.what() << "\n";
      ++failed;
    }
  }
  return failed == 0 ? kExitOk : kExitPartial;
}

int run_discriminate(const std::string& dir, const DiscriminatorConfig& cfg,
                     std::ostream& out, std::ostream& log) {
  const std::vector<std::string> names = list_pairs(dir, log);
  if (names.empty()) {
    log << "error: no pairs found\n";
    return kExitPartial;
  }
  const DiscriminatorWeights weights = DiscriminatorWeights::build(cfg);
  out << "pair,d_scalar\n";
  int failed = 0;
  for (const std::string& name : names) {
    try {
      const DiscriminatorOutput res =
          discriminator_forward(load_pair(dir, name), weights);
      out << name << "," << res.d_scalar << "\n";
    } catch (const std::exception& e) {
      log << "error: pair " << name << ": " << e.what() << "\n";
      ++failed;
    }
  }
  return failed == 0 ? kExitOk : kExitPartial;
}

}  // namespace stereosr
