#include "stereosr/discriminator.hpp"

#include <cmath>
#include <stdexcept>

namespace stereosr {

namespace {

Tensor3 relu(Tensor3 t) {
  t.data() = t.data().cwiseMax(0.0);
  return t;
}

// Reflect-pad bottom/right so both dims are multiples of `m`.
Tensor3 pad_to_multiple(const Tensor3& t, int m) {
  const int ph = (m - t.height() % m) % m;
  const int pw = (m - t.width() % m) % m;
  if (ph == 0 && pw == 0) return t;
  Tensor3 out(t.channels(), t.height() + ph, t.width() + pw, t.is_image());
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < out.height(); ++y) {
      const int sy = y < t.height() ? y : 2 * t.height() - 2 - y;
      for (int x = 0; x < out.width(); ++x) {
        const int sx = x < t.width() ? x : 2 * t.width() - 2 - x;
        out(c, y, x) = t(c, sy, sx);
      }
    }
  return out;
}

Tensor3 concat_channels(const Tensor3& a, const Tensor3& b) {
  if (a.height() != b.height() || a.width() != b.width())
    throw std::invalid_argument("concat_channels: spatial mismatch");
  Tensor3 out(a.channels() + b.channels(), a.height(), a.width());
  out.data().head(a.size()) = a.data();
  out.data().tail(b.size()) = b.data();
  return out;
}

Tensor3 upsample2x(const Tensor3& t) {
  return resize(t, t.height() * 2, t.width() * 2, ResizeMode::kBilinear);
}

UNetFeatures run_unet(const Tensor3& eye, const UNetWeights& w) {
  const Tensor3 padded = pad_to_multiple(eye, 4);
  const Tensor3 e1 = relu(conv3x3_reflect(padded, w.enc1));
  const Tensor3 e2 = relu(conv3x3_reflect(e1, w.enc2, /*stride=*/2));
  const Tensor3 e3 = relu(conv3x3_reflect(e2, w.enc3, /*stride=*/2));
  const Tensor3 d2 =
      relu(conv3x3_reflect(concat_channels(upsample2x(e3), e2), w.dec2));
  const Tensor3 d1 =
      relu(conv3x3_reflect(concat_channels(upsample2x(d2), e1), w.dec1));
  return {d1, d2, e3};
}

// Per-scanline cross attention as in the generator, tau = 1 and no
// learnable residual (Eq.-style plain attention).
Tensor3 cross_attention_rows(const Tensor3& q_src, const Tensor3& kv_src,
                             const Matrix& wq, const Matrix& wk,
                             const Matrix& wv, const Tensor3& q_norm,
                             const Tensor3& kv_norm) {
  const int c = q_src.channels();
  Tensor3 out(c, q_src.height(), q_src.width());
  for (int y = 0; y < q_src.height(); ++y) {
    Matrix q(q_src.width(), c), k(q_src.width(), c), v(q_src.width(), c);
    for (int x = 0; x < q_src.width(); ++x)
      for (int ch = 0; ch < c; ++ch) {
        q(x, ch) = q_norm(ch, y, x);
        k(x, ch) = kv_norm(ch, y, x);
        v(x, ch) = kv_src(ch, y, x);
      }
    const Matrix att = temperature_attention(
        q * wq.transpose(), k * wk.transpose(), v * wv.transpose(), 1.0);
    for (int x = 0; x < q_src.width(); ++x)
      for (int ch = 0; ch < c; ++ch) out(ch, y, x) = att(x, ch);
  }
  return out;
}

}  // namespace

IDEMWeights IDEMWeights::zeros(int c, int map_channels) {
  IDEMWeights w;
  w.w1_left = w.w1_right = w.w2_left = w.w2_right = Matrix::Zero(c, c);
  w.ln_gain = Vector::Ones(c);
  w.ln_bias = Vector::Zero(c);
  w.wc = Matrix::Zero(map_channels, c);
  w.wc_b = Vector::Zero(map_channels);
  return w;
}

namespace {

Matrix init_mat(int rows, int cols, int fan_in, SeededRng& rng) {
  const double a = std::sqrt(1.0 / fan_in);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-a, a);
  return m;
}

Vector init_vec(int n, int fan_in, SeededRng& rng) {
  const double a = std::sqrt(1.0 / fan_in);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-a, a);
  return v;
}

}  // namespace

IDEMWeights IDEMWeights::seeded(int c, int map_channels, SeededRng& rng) {
  IDEMWeights w = zeros(c, map_channels);
  w.w1_left = init_mat(c, c, c, rng);
  w.w1_right = init_mat(c, c, c, rng);
  w.w2_left = init_mat(c, c, c, rng);
  w.w2_right = init_mat(c, c, c, rng);
  w.wc = init_mat(map_channels, c, c, rng);
  w.wc_b = init_vec(map_channels, c, rng);
  return w;
}

Matrix SpectralConv::normalized() const {
  if (u.size() == 0 || v.size() == 0)
    throw std::logic_error("SpectralConv: normalize before use");
  const double sigma = u.dot(weight * v);
  if (sigma <= 0.0)
    throw std::runtime_error("SpectralConv: non-positive singular estimate");
  return weight / sigma;
}

SpectralConv spectral_normalize(SpectralConv conv) {
  if (conv.weight.size() == 0 || conv.weight.norm() == 0.0)
    throw std::invalid_argument("spectral_normalize: zero weight");
  if (conv.u.size() == 0) {
    // Deterministic start: constant vectors.
    conv.u = Vector::Ones(conv.weight.rows()).normalized();
    conv.v = Vector::Ones(conv.weight.cols()).normalized();
  }
  conv.v = (conv.weight.transpose() * conv.u).normalized();
  conv.u = (conv.weight * conv.v).normalized();
  ++conv.iterations;
  return conv;
}

void DiscriminatorConfig::validate() const {
  if (c1 < 1 || c2 < 1 || c3 < 1 || map_channels < 1)
    throw std::invalid_argument("DiscriminatorConfig: non-positive width");
  if (sn_warmup < 1)
    throw std::invalid_argument("DiscriminatorConfig: sn_warmup < 1");
}

DiscriminatorWeights DiscriminatorWeights::build(
    const DiscriminatorConfig& cfg) {
  cfg.validate();
  DiscriminatorWeights w;
  w.cfg = cfg;
  SeededRng rng(cfg.seed, 11);
  w.unet.enc1 = Conv3x3::seeded(cfg.c1, 3, rng);
  w.unet.enc2 = Conv3x3::seeded(cfg.c2, cfg.c1, rng);
  w.unet.enc3 = Conv3x3::seeded(cfg.c3, cfg.c2, rng);
  w.unet.dec2 = Conv3x3::seeded(cfg.c2, cfg.c3 + cfg.c2, rng);
  w.unet.dec1 = Conv3x3::seeded(cfg.c1, cfg.c2 + cfg.c1, rng);
  w.unet_in6 = Conv3x3::seeded(cfg.c1, 6, rng);
  w.idem_x1 = IDEMWeights::seeded(cfg.c1, cfg.map_channels, rng);
  w.idem_x2 = IDEMWeights::seeded(cfg.c2, cfg.map_channels, rng);
  w.idem_x4 = IDEMWeights::seeded(cfg.c3, cfg.map_channels, rng);
  {
    Conv3x3 sn = Conv3x3::seeded(cfg.map_channels, cfg.c1, rng);
    w.conv_sn.weight = std::move(sn.w);
    w.conv_sn.b = std::move(sn.b);
    for (int i = 0; i < cfg.sn_warmup; ++i)
      w.conv_sn = spectral_normalize(std::move(w.conv_sn));
  }
  int fusion_in;
  switch (cfg.variant) {
    case DiscVariant::kA: fusion_in = cfg.map_channels; break;
    case DiscVariant::kB: fusion_in = cfg.map_channels; break;
    case DiscVariant::kC: fusion_in = 2 * cfg.map_channels; break;
    default: fusion_in = 3 * cfg.map_channels + 2 * cfg.map_channels; break;
  }
  w.fusion = cfg.zero_fusion ? Conv3x3::zeros(1, fusion_in)
                             : Conv3x3::seeded(1, fusion_in, rng);
  return w;
}

std::pair<UNetFeatures, UNetFeatures> unet_features(const StereoPair& pair,
                                                    const UNetWeights& w) {
  if (pair.left.channels() != 3 || pair.right.channels() != 3)
    throw std::invalid_argument("unet_features: expects 3-channel eyes");
  return {run_unet(pair.left, w), run_unet(pair.right, w)};
}

Tensor3 idem(const Tensor3& xl, const Tensor3& xr, const IDEMWeights& w) {
  require_same_shape(xl, xr, "idem");
  const Tensor3 bar_l = layer_norm(xl, w.ln_gain, w.ln_bias);
  const Tensor3 bar_r = layer_norm(xr, w.ln_gain, w.ln_bias);
  const Tensor3 f_rl = cross_attention_rows(xl, xr, w.w1_left, w.w1_right,
                                            w.w2_right, bar_l, bar_r);
  const Tensor3 f_lr = cross_attention_rows(xr, xl, w.w1_right, w.w1_left,
                                            w.w2_left, bar_r, bar_l);
  Tensor3 f_d = f_rl;
  f_d.data() = f_d.data().cwiseProduct(f_lr.data());
  return pointwise(f_d, w.wc, w.wc_b);
}

namespace {

Tensor3 conv_sn_relu(const Tensor3& feat, const SpectralConv& sn) {
  // Pointwise-equivalent 3x3 spectral conv: reuse conv3x3 with the
  // normalized weight.
  Conv3x3 c{sn.normalized(), sn.b};
  Tensor3 out = conv3x3_reflect(feat, c);
  out.data() = out.data().cwiseMax(0.0);
  return out;
}

DiscriminatorOutput finish(Tensor3 fused, int out_h, int out_w) {
  // Crop any pad-to-multiple-of-4 rows/cols back off.
  Tensor3 d_map(1, out_h, out_w);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) d_map(0, y, x) = fused(0, y, x);
  const double mean = d_map.data().mean();
  return {std::move(d_map), mean};
}

}  // namespace

DiscriminatorOutput discriminator_forward(const StereoPair& pair,
                                          const DiscriminatorWeights& w) {
  const DiscriminatorConfig& cfg = w.cfg;
  const int out_h = pair.left.height(), out_w = pair.left.width();

  if (cfg.variant == DiscVariant::kB) {
    // Joint 6-channel front end, single feature stream, no IDEM.
    const Tensor3 joint =
        pad_to_multiple(concat_channels(pair.left, pair.right), 4);
    Tensor3 e1 = relu(conv3x3_reflect(joint, w.unet_in6));
    const Tensor3 sn = conv_sn_relu(e1, w.conv_sn);
    return finish(conv3x3_reflect(sn, w.fusion), out_h, out_w);
  }

  const auto [fl, fr] = unet_features(pair, w.unet);

  if (cfg.variant == DiscVariant::kA) {
    // Per-eye single-image scores, averaged.
    const Tensor3 ml =
        conv3x3_reflect(conv_sn_relu(fl.f_x1, w.conv_sn), w.fusion);
    const Tensor3 mr =
        conv3x3_reflect(conv_sn_relu(fr.f_x1, w.conv_sn), w.fusion);
    Tensor3 avg = ml;
    avg.data() = 0.5 * (ml.data() + mr.data());
    return finish(std::move(avg), out_h, out_w);
  }

  if (cfg.variant == DiscVariant::kC) {
    // Per-eye features fused by a final conv, still no IDEM.
    const Tensor3 cat = concat_channels(conv_sn_relu(fl.f_x1, w.conv_sn),
                                        conv_sn_relu(fr.f_x1, w.conv_sn));
    return finish(conv3x3_reflect(cat, w.fusion), out_h, out_w);
  }

  // Variant d: multi-scale IDEM maps + per-eye spectral features.
  const Tensor3 m_x1 = idem(fl.f_x1, fr.f_x1, w.idem_x1);
  const Tensor3 m_x2 = idem(fl.f_x2, fr.f_x2, w.idem_x2);
  const Tensor3 m_x4 = idem(fl.f_x4, fr.f_x4, w.idem_x4);
  const int h1 = m_x1.height(), w1 = m_x1.width();
  const Tensor3 m_x2_up = resize(m_x2, h1, w1, ResizeMode::kBilinear);
  const Tensor3 m_x4_up = resize(m_x4, h1, w1, ResizeMode::kBilinear);
  const Tensor3 sn_cat = concat_channels(conv_sn_relu(fl.f_x1, w.conv_sn),
                                         conv_sn_relu(fr.f_x1, w.conv_sn));
  const Tensor3 cat = concat_channels(
      concat_channels(concat_channels(m_x1, m_x2_up), m_x4_up), sn_cat);
  return finish(conv3x3_reflect(cat, w.fusion), out_h, out_w);
}

std::vector<WeightBlob> DiscriminatorWeights::to_blobs() const {
  std::vector<WeightBlob> blobs;
  auto add_mat = [&](const std::string& name, const Matrix& m) {
    WeightBlob b;
    b.name = name;
    b.shape = {static_cast<std::uint64_t>(m.rows()),
               static_cast<std::uint64_t>(m.cols())};
    b.data.resize(m.size());
    Eigen::Map<Matrix>(b.data.data(), m.rows(), m.cols()) = m;
    blobs.push_back(std::move(b));
  };
  auto add_vec = [&](const std::string& name, const Vector& v) {
    blobs.push_back({name, {static_cast<std::uint64_t>(v.size())}, v});
  };
  auto add_conv = [&](const std::string& name, const Conv3x3& c) {
    add_mat(name + ".w", c.w);
    add_vec(name + ".b", c.b);
  };
  add_conv("unet.enc1", unet.enc1);
  add_conv("unet.enc2", unet.enc2);
  add_conv("unet.enc3", unet.enc3);
  add_conv("unet.dec2", unet.dec2);
  add_conv("unet.dec1", unet.dec1);
  add_conv("unet_in6", unet_in6);
  auto add_idem = [&](const std::string& p, const IDEMWeights& w) {
    add_mat(p + ".w1_left", w.w1_left);
    add_mat(p + ".w1_right", w.w1_right);
    add_mat(p + ".w2_left", w.w2_left);
    add_mat(p + ".w2_right", w.w2_right);
    add_vec(p + ".ln_gain", w.ln_gain);
    add_vec(p + ".ln_bias", w.ln_bias);
    add_mat(p + ".wc", w.wc);
    add_vec(p + ".wc_b", w.wc_b);
  };
  add_idem("idem_x1", idem_x1);
  add_idem("idem_x2", idem_x2);
  add_idem("idem_x4", idem_x4);
  add_mat("conv_sn.w", conv_sn.weight);
  add_vec("conv_sn.b", conv_sn.b);
  add_conv("fusion", fusion);
  return blobs;
}

}  // namespace stereosr
