#include "stereosr/degradation.hpp"

#include <jpeglib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stereosr/image_io.hpp"

namespace stereosr {

namespace {

using json = nlohmann::json;

constexpr double kPi = std::numbers::pi;

int round_dim(double v) {
  const int d = static_cast<int>(std::llround(v));
  return std::max(d, 8);  // intermediate dims never drop below 8
}

ResizeMode mode_from_index(int m) {
  switch (m) {
    case 0: return ResizeMode::kBicubic;
    case 1: return ResizeMode::kBilinear;
    default: return ResizeMode::kArea;
  }
}

}  // namespace

void DegradationConfig::validate() const {
  auto check_range = [](const Range& r, const char* name) {
    if (r.lo > r.hi)
      throw std::invalid_argument(std::string("DegradationConfig: ") + name +
                                  " has lo > hi");
  };
  check_range(blur_sigma_range, "blur_sigma_range");
  check_range(resize_range, "resize_range");
  check_range(noise_range, "noise_range");
  check_range(poisson_scale_range, "poisson_scale_range");
  check_range(jpeg_range, "jpeg_range");
  check_range(sinc_cutoff_range, "sinc_cutoff_range");
  if (scale < 1) throw std::invalid_argument("DegradationConfig: scale < 1");
  if (kernel_size % 2 == 0 || kernel_size < 3)
    throw std::invalid_argument("DegradationConfig: kernel_size must be odd");
  for (double p : {anisotropic_prob, sinc_prob, skip_prob})
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument(
          "DegradationConfig: probability outside [0,1]");
}

Kernel2D make_gaussian_kernel(int size, double sigma_x, double sigma_y,
                              double theta) {
  if (sigma_x <= 0.0 || sigma_y <= 0.0)
    throw std::invalid_argument("make_gaussian_kernel: non-positive sigma");
  if (size % 2 == 0 || size < 1)
    throw std::invalid_argument("make_gaussian_kernel: size must be odd");
  const int r = size / 2;
  const double ct = std::cos(theta), st = std::sin(theta);
  Matrix taps(size, size);
  for (int y = -r; y <= r; ++y)
    for (int x = -r; x <= r; ++x) {
      const double u = x * ct + y * st;
      const double v = -x * st + y * ct;
      taps(y + r, x + r) = std::exp(
          -0.5 * (u * u / (sigma_x * sigma_x) + v * v / (sigma_y * sigma_y)));
    }
  taps /= taps.sum();
  return Kernel2D(size, std::move(taps));
}

double bessel_j1(double x) {
  const double ax = std::abs(x);
  double result;
  if (ax < 18.0) {
    // Power series in extended precision; alternating with full
    // cancellation handled by the wider mantissa.
    const long double half = static_cast<long double>(ax) / 2.0L;
    long double term = half;  // m = 0: (x/2) / (0! 1!)
    long double sum = term;
    for (int m = 1; m < 60; ++m) {
      term *= -(half * half) / (static_cast<long double>(m) * (m + 1));
      sum += term;
      if (std::abs(static_cast<double>(term)) < 1e-18) break;
    }
    result = static_cast<double>(sum);
  } else {
    // Hankel asymptotic expansion, mu = 4.
    const double z = 8.0 * ax;
    double t = 1.0, p = 1.0, q = 0.0;
    double prev = 1.0;
    for (int k = 1; k < 30; ++k) {
      const double num = 4.0 - (2.0 * k - 1.0) * (2.0 * k - 1.0);
      t *= num / (k * z);
      if (std::abs(t) > prev) break;  // asymptotic tail started growing
      prev = std::abs(t);
      const int m = k / 2;
      const double signed_t = (m % 2 == 0) ? t : -t;
      if (k % 2 == 0)
        p += signed_t;
      else
        q += signed_t;
      if (std::abs(t) < 1e-17) break;
    }
    const double chi = ax - 0.75 * kPi;
    result = std::sqrt(2.0 / (kPi * ax)) *
             (p * std::cos(chi) - q * std::sin(chi));
  }
  return x < 0.0 ? -result : result;
}

Kernel2D make_sinc_kernel(int size, double cutoff) {
  if (cutoff <= 0.0 || cutoff > kPi)
    throw std::invalid_argument("make_sinc_kernel: cutoff outside (0, pi]");
  if (size % 2 == 0 || size < 1)
    throw std::invalid_argument("make_sinc_kernel: size must be odd");
  const int r = size / 2;
  Matrix taps(size, size);
  for (int y = -r; y <= r; ++y)
    for (int x = -r; x <= r; ++x) {
      const double rad = std::sqrt(double(x) * x + double(y) * y);
      taps(y + r, x + r) =
          rad == 0.0 ? cutoff * cutoff / (4.0 * kPi)
                     : cutoff / (2.0 * kPi * rad) * bessel_j1(cutoff * rad);
    }
  taps /= taps.sum();
  return Kernel2D(size, std::move(taps));
}

Tensor3 add_gaussian_noise(const Tensor3& img, double sigma_8bit,
                           SeededRng rng) {
  const double sigma = sigma_8bit / 255.0;
  Tensor3 out = img;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out.data()[i] += sigma * rng.fork(static_cast<std::uint64_t>(i)).normal();
  if (out.is_image()) out.clamp01();
  return out;
}

Tensor3 add_poisson_noise(const Tensor3& img, double scale, SeededRng rng) {
  if (scale <= 0.0)
    throw std::invalid_argument("add_poisson_noise: scale must be positive");
  const double gain = 255.0 * scale;
  Tensor3 out = img;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double lam = std::max(0.0, img.data()[i]) * gain;
    out.data()[i] =
        static_cast<double>(
            rng.fork(static_cast<std::uint64_t>(i)).poisson(lam)) /
        gain;
  }
  if (out.is_image()) out.clamp01();
  return out;
}

namespace {

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

}  // namespace

Tensor3 jpeg_roundtrip(const Tensor3& img, int quality) {
  if (img.channels() != 3)
    throw std::invalid_argument("jpeg_roundtrip: expects a 3-channel image");
  if (quality < 1 || quality > 100)
    throw std::invalid_argument("jpeg_roundtrip: quality outside [1,100]");

  const int h = img.height(), w = img.width();
  std::vector<unsigned char> rgb(static_cast<size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        rgb[(static_cast<size_t>(y) * w + x) * 3 + c] = to_byte(img(c, y, x));

  // Encode.
  jpeg_compress_struct enc;
  JpegErrorMgr err;
  enc.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  unsigned char* buf = nullptr;
  unsigned long buf_size = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&enc);
    free(buf);
    throw std::runtime_error("jpeg_roundtrip: encode failure");
  }
  jpeg_create_compress(&enc);
  jpeg_mem_dest(&enc, &buf, &buf_size);
  enc.image_width = w;
  enc.image_height = h;
  enc.input_components = 3;
  enc.in_color_space = JCS_RGB;
  jpeg_set_defaults(&enc);
  jpeg_set_quality(&enc, quality, TRUE);  // baseline
  // 4:2:0 chroma subsampling.
  enc.comp_info[0].h_samp_factor = 2;
  enc.comp_info[0].v_samp_factor = 2;
  enc.comp_info[1].h_samp_factor = 1;
  enc.comp_info[1].v_samp_factor = 1;
  enc.comp_info[2].h_samp_factor = 1;
  enc.comp_info[2].v_samp_factor = 1;
  jpeg_start_compress(&enc, TRUE);
  while (enc.next_scanline < enc.image_height) {
    JSAMPROW row = rgb.data() + static_cast<size_t>(enc.next_scanline) * w * 3;
    jpeg_write_scanlines(&enc, &row, 1);
  }
  jpeg_finish_compress(&enc);
  jpeg_destroy_compress(&enc);

  // Decode.
  jpeg_decompress_struct dec;
  dec.err = jpeg_std_error(&err.pub);
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&dec);
    free(buf);
    throw std::runtime_error("jpeg_roundtrip: decode failure");
  }
  jpeg_create_decompress(&dec);
  jpeg_mem_src(&dec, buf, buf_size);
  jpeg_read_header(&dec, TRUE);
  dec.out_color_space = JCS_RGB;
  jpeg_start_decompress(&dec);

  Tensor3 out(3, h, w, /*is_image=*/true);
  std::vector<unsigned char> row(static_cast<size_t>(w) * 3);
  int y = 0;
  while (dec.output_scanline < dec.output_height) {
    JSAMPROW rp = row.data();
    jpeg_read_scanlines(&dec, &rp, 1);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        out(c, y, x) = row[3 * x + c] / 255.0;
    ++y;
  }
  jpeg_finish_decompress(&dec);
  jpeg_destroy_decompress(&dec);
  free(buf);
  return out;
}

namespace {

// Stage machinery. Each sampling event draws from its own forked
// sub-stream whose id is written to the record; replay reconstructs the
// stream from (seed, stream_id) alone.

struct StageCtx {
  const DegradationConfig& cfg;
  SeededRng& rng;
  std::uint64_t next_sub = 0;
  const char* stage;
  std::vector<DegradationOp>* ops;

  SeededRng sub() { return rng.fork(next_sub++); }

  void emit(const char* op, const char* eye,
            std::map<std::string, double> params, std::uint64_t stream_id) {
    ops->push_back({stage, op, eye, std::move(params), stream_id});
  }
};

std::map<std::string, double> sample_blur_params(const DegradationConfig& cfg,
                                                 SeededRng& s) {
  std::map<std::string, double> p;
  p["size"] = cfg.kernel_size;
  p["sigma_x"] = s.uniform(cfg.blur_sigma_range.lo, cfg.blur_sigma_range.hi);
  if (s.bernoulli(cfg.anisotropic_prob)) {
    p["sigma_y"] = s.uniform(cfg.blur_sigma_range.lo, cfg.blur_sigma_range.hi);
    p["theta"] = s.uniform(0.0, kPi);
  } else {
    p["sigma_y"] = p["sigma_x"];
    p["theta"] = 0.0;
  }
  return p;
}

Tensor3 apply_blur(const Tensor3& img, const std::map<std::string, double>& p) {
  const Kernel2D k =
      make_gaussian_kernel(static_cast<int>(p.at("size")), p.at("sigma_x"),
                           p.at("sigma_y"), p.at("theta"));
  return conv2d_reflect(img, k);
}

void do_blur(StereoPair& pair, StageCtx& ctx) {
  if (ctx.cfg.enable_vb) {
    SeededRng sl = ctx.sub(), sr = ctx.sub();
    auto pl = sample_blur_params(ctx.cfg, sl);
    auto pr = sample_blur_params(ctx.cfg, sr);
    pair.left = apply_blur(pair.left, pl);
    pair.right = apply_blur(pair.right, pr);
    ctx.emit("blur", "left", std::move(pl), sl.stream_id());
    ctx.emit("blur", "right", std::move(pr), sr.stream_id());
  } else {
    SeededRng s = ctx.sub();
    auto p = sample_blur_params(ctx.cfg, s);
    pair.left = apply_blur(pair.left, p);
    pair.right = apply_blur(pair.right, p);
    ctx.emit("blur", "both", std::move(p), s.stream_id());
  }
}

void do_resize(StereoPair& pair, StageCtx& ctx) {
  SeededRng s = ctx.sub();
  const double f = s.uniform(ctx.cfg.resize_range.lo, ctx.cfg.resize_range.hi);
  const int mode = static_cast<int>(s.next_below(3));
  std::map<std::string, double> p;
  p["factor"] = f;
  p["h"] = round_dim(pair.left.height() * f);
  p["w"] = round_dim(pair.left.width() * f);
  p["mode"] = mode;
  pair.left = resize(pair.left, static_cast<int>(p["h"]),
                     static_cast<int>(p["w"]), mode_from_index(mode));
  pair.right = resize(pair.right, static_cast<int>(p["h"]),
                      static_cast<int>(p["w"]), mode_from_index(mode));
  ctx.emit("resize", "both", std::move(p), s.stream_id());
}

std::map<std::string, double> sample_noise_params(
    const DegradationConfig& cfg, SeededRng& s) {
  std::map<std::string, double> p;
  const bool gaussian = s.bernoulli(0.5);
  p["kind"] = gaussian ? 0.0 : 1.0;
  p["level"] = gaussian
                   ? s.uniform(cfg.noise_range.lo, cfg.noise_range.hi)
                   : s.uniform(cfg.poisson_scale_range.lo,
                               cfg.poisson_scale_range.hi);
  return p;
}

Tensor3 apply_noise(const Tensor3& img, const std::map<std::string, double>& p,
                    SeededRng realization) {
  return p.at("kind") == 0.0
             ? add_gaussian_noise(img, p.at("level"), realization)
             : add_poisson_noise(img, p.at("level"), realization);
}

void do_noise(StereoPair& pair, StageCtx& ctx) {
  // Parameters are shared unless VN; realizations are always per-eye.
  SeededRng pl = ctx.sub();
  auto params_l = sample_noise_params(ctx.cfg, pl);
  auto params_r = params_l;
  if (ctx.cfg.enable_vn) {
    SeededRng pr = ctx.sub();
    params_r = sample_noise_params(ctx.cfg, pr);
  }
  SeededRng rl = ctx.sub(), rr = ctx.sub();
  pair.left = apply_noise(pair.left, params_l, rl);
  pair.right = apply_noise(pair.right, params_r, rr);
  ctx.emit("noise", "left", std::move(params_l), rl.stream_id());
  ctx.emit("noise", "right", std::move(params_r), rr.stream_id());
}

void do_jpeg(StereoPair& pair, StageCtx& ctx) {
  SeededRng s = ctx.sub();
  const int lo = static_cast<int>(std::llround(ctx.cfg.jpeg_range.lo));
  const int hi = static_cast<int>(std::llround(ctx.cfg.jpeg_range.hi));
  const int q = lo + static_cast<int>(s.next_below(hi - lo + 1));
  pair.left = jpeg_roundtrip(pair.left, q);
  pair.right = jpeg_roundtrip(pair.right, q);
  ctx.emit("jpeg", "both", {{"quality", double(q)}}, s.stream_id());
}

void do_sinc(StereoPair& pair, StageCtx& ctx) {
  auto sample = [&](SeededRng& s) {
    std::map<std::string, double> p;
    p["size"] = ctx.cfg.kernel_size;
    p["cutoff"] = s.uniform(ctx.cfg.sinc_cutoff_range.lo,
                            ctx.cfg.sinc_cutoff_range.hi);
    return p;
  };
  auto apply = [](const Tensor3& img, const std::map<std::string, double>& p) {
    return conv2d_reflect(img, make_sinc_kernel(static_cast<int>(p.at("size")),
                                                p.at("cutoff")));
  };
  if (ctx.cfg.enable_vb) {
    SeededRng sl = ctx.sub(), sr = ctx.sub();
    auto p_left = sample(sl);
    auto p_right = sample(sr);
    pair.left = apply(pair.left, p_left);
    pair.right = apply(pair.right, p_right);
    ctx.emit("sinc", "left", std::move(p_left), sl.stream_id());
    ctx.emit("sinc", "right", std::move(p_right), sr.stream_id());
  } else {
    SeededRng s = ctx.sub();
    auto p = sample(s);
    pair.left = apply(pair.left, p);
    pair.right = apply(pair.right, p);
    ctx.emit("sinc", "both", std::move(p), s.stream_id());
  }
}

using FamilyFn = void (*)(StereoPair&, StageCtx&);
constexpr std::array<FamilyFn, 4> kFamilies = {do_blur, do_resize, do_noise,
                                               do_jpeg};

}  // namespace

StageResult stage1(const StereoPair& pair, const DegradationConfig& cfg,
                   SeededRng rng) {
  cfg.validate();
  StageResult res{pair, {}};
  StageCtx ctx{cfg, rng, 0, "stage1", &res.ops};
  for (FamilyFn fn : kFamilies) fn(res.pair, ctx);
  return res;
}

StageResult stage2(const StereoPair& pair, const DegradationConfig& cfg,
                   SeededRng rng) {
  cfg.validate();
  StageResult res{pair, {}};
  StageCtx ctx{cfg, rng, 0, "stage2", &res.ops};

  std::array<int, 4> order = {0, 1, 2, 3};
  if (cfg.enable_so) {
    for (int i = 3; i > 0; --i)
      std::swap(order[i], order[rng.next_below(i + 1)]);
  }
  for (int idx : order) {
    if (rng.bernoulli(cfg.skip_prob)) continue;
    kFamilies[idx](res.pair, ctx);
  }
  return res;
}

StageResult stage3(const StereoPair& pair, const DegradationConfig& cfg,
                   SeededRng rng) {
  cfg.validate();
  StageResult res{pair, {}};
  StageCtx ctx{cfg, rng, 0, "stage3", &res.ops};

  const bool with_sinc = rng.bernoulli(cfg.sinc_prob);
  const bool sinc_first = with_sinc ? rng.bernoulli(0.5) : false;
  if (with_sinc && sinc_first) do_sinc(res.pair, ctx);
  do_jpeg(res.pair, ctx);
  if (with_sinc && !sinc_first) do_sinc(res.pair, ctx);
  return res;
}

DegradeResult degrade_pair(const StereoPair& hr, const DegradationConfig& cfg,
                           std::uint64_t seed) {
  cfg.validate();
  if (hr.left.height() % cfg.scale != 0 || hr.left.width() % cfg.scale != 0)
    throw std::invalid_argument(
        "degrade_pair: HR dims not divisible by scale");

  DegradeResult res;
  res.record.seed = seed;

  StageResult s1 = stage1(hr, cfg, SeededRng(seed, 1));
  StageResult s2 = stage2(s1.pair, cfg, SeededRng(seed, 2));
  StageResult s3 = stage3(s2.pair, cfg, SeededRng(seed, 3));

  const int out_h = hr.left.height() / cfg.scale;
  const int out_w = hr.left.width() / cfg.scale;
  res.pair.left = resize(s3.pair.left, out_h, out_w, ResizeMode::kBicubic);
  res.pair.right = resize(s3.pair.right, out_h, out_w, ResizeMode::kBicubic);

  auto& ops = res.record.ops;
  for (auto* v : {&s1.ops, &s2.ops, &s3.ops})
    ops.insert(ops.end(), v->begin(), v->end());
  ops.push_back({"final", "resize", "both",
                 {{"h", double(out_h)}, {"w", double(out_w)}, {"mode", 0.0}},
                 0});
  return res;
}

StereoPair replay_record(const StereoPair& hr, const DegradationRecord& rec) {
  StereoPair pair = hr;
  auto each_eye = [&](const DegradationOp& op, auto&& fn) {
    if (op.eye == "left" || op.eye == "both") pair.left = fn(pair.left);
    if (op.eye == "right" || op.eye == "both") pair.right = fn(pair.right);
  };
  for (const DegradationOp& op : rec.ops) {
    if (op.op == "blur") {
      each_eye(op, [&](const Tensor3& t) { return apply_blur(t, op.params); });
    } else if (op.op == "sinc") {
      each_eye(op, [&](const Tensor3& t) {
        return conv2d_reflect(
            t, make_sinc_kernel(static_cast<int>(op.params.at("size")),
                                op.params.at("cutoff")));
      });
    } else if (op.op == "resize") {
      each_eye(op, [&](const Tensor3& t) {
        return resize(t, static_cast<int>(op.params.at("h")),
                      static_cast<int>(op.params.at("w")),
                      mode_from_index(static_cast<int>(op.params.at("mode"))));
      });
    } else if (op.op == "noise") {
      each_eye(op, [&](const Tensor3& t) {
        return apply_noise(t, op.params, SeededRng(rec.seed, op.stream_id));
      });
    } else if (op.op == "jpeg") {
      each_eye(op, [&](const Tensor3& t) {
        return jpeg_roundtrip(t, static_cast<int>(op.params.at("quality")));
      });
    } else {
      throw std::invalid_argument("replay_record: unknown op " + op.op);
    }
  }
  return pair;
}

std::string DegradationRecord::to_jsonl() const {
  json j;
  j["seed"] = seed;
  j["ops"] = json::array();
  for (const DegradationOp& op : ops) {
    json o;
    o["stage"] = op.stage;
    o["op"] = op.op;
    o["eye"] = op.eye;
    o["params"] = op.params;
    o["stream_id"] = op.stream_id;
    j["ops"].push_back(std::move(o));
  }
  return j.dump();
}

DegradationRecord DegradationRecord::from_jsonl(const std::string& text) {
  const json j = json::parse(text);
  DegradationRecord rec;
  rec.seed = j.at("seed").get<std::uint64_t>();
  for (const json& o : j.at("ops")) {
    DegradationOp op;
    op.stage = o.at("stage").get<std::string>();
    op.op = o.at("op").get<std::string>();
    op.eye = o.at("eye").get<std::string>();
    op.params = o.at("params").get<std::map<std::string, double>>();
    op.stream_id = o.at("stream_id").get<std::uint64_t>();
    rec.ops.push_back(std::move(op));
  }
  return rec;
}

}  // namespace stereosr
