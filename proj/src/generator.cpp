#include "stereosr/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stereosr {

namespace {

double init_scale(int fan_in) { return std::sqrt(1.0 / fan_in); }

Matrix init_matrix(int rows, int cols, int fan_in, SeededRng& rng) {
  const double a = init_scale(fan_in);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-a, a);
  return m;
}

Vector init_vector(int n, int fan_in, SeededRng& rng) {
  const double a = init_scale(fan_in);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-a, a);
  return v;
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// Tokens of one scanline as rows: W x C.
Matrix row_tokens(const Tensor3& t, int y) {
  Matrix m(t.width(), t.channels());
  for (int x = 0; x < t.width(); ++x)
    for (int c = 0; c < t.channels(); ++c) m(x, c) = t(c, y, x);
  return m;
}

// c x (h*w) view of a channel-major tensor; columns are pixel features.
Eigen::Map<const Matrix> as_columns(const Tensor3& t) {
  return Eigen::Map<const Matrix>(
      t.data().data(), t.channels(),
      static_cast<Eigen::Index>(t.height()) * t.width());
}

Tensor3 depthwise3x3_reflect(const Tensor3& feat, const Matrix& taps,
                             const Vector& bias) {
  Tensor3 out(feat.channels(), feat.height(), feat.width());
  for (int c = 0; c < feat.channels(); ++c) {
    auto src = feat.channel(c);
    auto dst = out.channel(c);
    for (int y = 0; y < feat.height(); ++y)
      for (int x = 0; x < feat.width(); ++x) {
        double acc = bias[c];
        for (int ky = -1; ky <= 1; ++ky)
          for (int kx = -1; kx <= 1; ++kx)
            acc += taps(c, (ky + 1) * 3 + kx + 1) *
                   src(reflect(y + ky, feat.height()),
                       reflect(x + kx, feat.width()));
        dst(y, x) = acc;
      }
  }
  return out;
}

}  // namespace

Conv3x3 Conv3x3::zeros(int out_c, int in_c) {
  return {Matrix::Zero(out_c, in_c * 9), Vector::Zero(out_c)};
}

Conv3x3 Conv3x3::seeded(int out_c, int in_c, SeededRng& rng) {
  const int fan_in = in_c * 9;
  Conv3x3 conv;
  conv.w = init_matrix(out_c, in_c * 9, fan_in, rng);
  conv.b = init_vector(out_c, fan_in, rng);
  return conv;
}

Tensor3 conv3x3_reflect(const Tensor3& feat, const Conv3x3& conv,
                        int stride) {
  const int ci = feat.channels();
  if (conv.w.cols() != ci * 9)
    throw std::invalid_argument("conv3x3_reflect: channel mismatch");
  const int co = static_cast<int>(conv.w.rows());
  const int oh = (feat.height() + stride - 1) / stride;
  const int ow = (feat.width() + stride - 1) / stride;
  Tensor3 out(co, oh, ow);
  Vector patch(ci * 9);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      int idx = 0;
      for (int c = 0; c < ci; ++c)
        for (int ky = -1; ky <= 1; ++ky)
          for (int kx = -1; kx <= 1; ++kx)
            patch[idx++] = feat(c, reflect(y * stride + ky, feat.height()),
                                reflect(x * stride + kx, feat.width()));
      const Vector o = conv.w * patch + conv.b;
      for (int c = 0; c < co; ++c) out(c, y, x) = o[c];
    }
  return out;
}

Tensor3 pointwise(const Tensor3& feat, const Matrix& w, const Vector& b) {
  if (w.cols() != feat.channels())
    throw std::invalid_argument("pointwise: channel mismatch");
  const int co = static_cast<int>(w.rows());
  Tensor3 out(co, feat.height(), feat.width());
  const Eigen::Index n =
      static_cast<Eigen::Index>(feat.height()) * feat.width();
  Eigen::Map<Matrix> dst(out.data().data(), co, n);
  dst = w * as_columns(feat);
  dst.colwise() += b;
  return out;
}

Tensor3 pointwise(const Tensor3& feat, const Matrix& w) {
  return pointwise(feat, w, Vector::Zero(w.rows()));
}

NAFBlockWeights NAFBlockWeights::zeros(int c) {
  NAFBlockWeights w;
  w.ln1_gain = w.ln2_gain = Vector::Ones(c);
  w.ln1_bias = w.ln2_bias = Vector::Zero(c);
  w.pw_expand = Matrix::Zero(2 * c, c);
  w.pw_expand_b = Vector::Zero(2 * c);
  w.dw3x3 = Matrix::Zero(2 * c, 9);
  w.dw3x3_b = Vector::Zero(2 * c);
  w.ca = Matrix::Zero(c, c);
  w.ca_b = Vector::Zero(c);
  w.pw_project = Matrix::Zero(c, c);
  w.pw_project_b = Vector::Zero(c);
  w.ffn1 = Matrix::Zero(2 * c, c);
  w.ffn1_b = Vector::Zero(2 * c);
  w.ffn2 = Matrix::Zero(c, c);
  w.ffn2_b = Vector::Zero(c);
  w.res1_scale = w.res2_scale = Vector::Zero(c);
  return w;
}

NAFBlockWeights NAFBlockWeights::seeded(int c, SeededRng& rng) {
  NAFBlockWeights w = zeros(c);
  w.pw_expand = init_matrix(2 * c, c, c, rng);
  w.pw_expand_b = init_vector(2 * c, c, rng);
  w.dw3x3 = init_matrix(2 * c, 9, 9, rng);
  w.dw3x3_b = init_vector(2 * c, 9, rng);
  w.ca = init_matrix(c, c, c, rng);
  w.ca_b = init_vector(c, c, rng);
  w.pw_project = init_matrix(c, c, c, rng);
  w.pw_project_b = init_vector(c, c, rng);
  w.ffn1 = init_matrix(2 * c, c, c, rng);
  w.ffn1_b = init_vector(2 * c, c, rng);
  w.ffn2 = init_matrix(c, c, c, rng);
  w.ffn2_b = init_vector(c, c, rng);
  w.res1_scale = init_vector(c, 1, rng);
  w.res2_scale = init_vector(c, 1, rng);
  return w;
}

Tensor3 simple_gate(const Tensor3& feat) {
  if (feat.channels() % 2 != 0)
    throw std::invalid_argument("simple_gate: odd channel count");
  const int half = feat.channels() / 2;
  Tensor3 out(half, feat.height(), feat.width());
  const Eigen::Index plane =
      static_cast<Eigen::Index>(feat.height()) * feat.width();
  for (int c = 0; c < half; ++c)
    out.data().segment(c * plane, plane) =
        feat.data()
            .segment(c * plane, plane)
            .cwiseProduct(feat.data().segment((half + c) * plane, plane));
  return out;
}

Tensor3 naf_block(const Tensor3& feat, const NAFBlockWeights& w) {
  const int c = feat.channels();
  if (w.pw_expand.cols() != c)
    throw std::invalid_argument("naf_block: channel mismatch");

  // MBConv branch: expand, depthwise, SimpleGate, channel attention,
  // project.
  Tensor3 x = layer_norm(feat, w.ln1_gain, w.ln1_bias);
  x = pointwise(x, w.pw_expand, w.pw_expand_b);
  x = depthwise3x3_reflect(x, w.dw3x3, w.dw3x3_b);
  x = simple_gate(x);
  {
    Vector pooled(c);
    const Eigen::Index plane =
        static_cast<Eigen::Index>(x.height()) * x.width();
    for (int ch = 0; ch < c; ++ch)
      pooled[ch] = x.data().segment(ch * plane, plane).mean();
    const Vector att = w.ca * pooled + w.ca_b;
    for (int ch = 0; ch < c; ++ch)
      x.data().segment(ch * plane, plane) *= att[ch];
  }
  x = pointwise(x, w.pw_project, w.pw_project_b);
  Tensor3 mid = feat;
  {
    const Eigen::Index plane =
        static_cast<Eigen::Index>(x.height()) * x.width();
    for (int ch = 0; ch < c; ++ch)
      mid.data().segment(ch * plane, plane) +=
          w.res1_scale[ch] * x.data().segment(ch * plane, plane);
  }

  // FFN branch.
  Tensor3 y = layer_norm(mid, w.ln2_gain, w.ln2_bias);
  y = pointwise(y, w.ffn1, w.ffn1_b);
  y = simple_gate(y);
  y = pointwise(y, w.ffn2, w.ffn2_b);
  Tensor3 out = mid;
  {
    const Eigen::Index plane =
        static_cast<Eigen::Index>(y.height()) * y.width();
    for (int ch = 0; ch < c; ++ch)
      out.data().segment(ch * plane, plane) +=
          w.res2_scale[ch] * y.data().segment(ch * plane, plane);
  }
  return out;
}

Matrix temperature_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                             double tau) {
  if (q.cols() != k.cols())
    throw std::invalid_argument("temperature_attention: feature dims differ");
  if (k.rows() != v.rows())
    throw std::invalid_argument("temperature_attention: key/value rows differ");
  const double scale = tau / std::sqrt(static_cast<double>(q.cols()));
  return softmax_rows(scale * (q * k.transpose())) * v;
}

SCATMWeights SCATMWeights::zeros(int c, double tau) {
  SCATMWeights w;
  w.w1_left = w.w1_right = w.w2_left = w.w2_right = Matrix::Zero(c, c);
  w.gamma_left = w.gamma_right = Vector::Zero(c);
  w.tau = tau;
  return w;
}

SCATMWeights SCATMWeights::seeded(int c, double tau, SeededRng& rng) {
  SCATMWeights w;
  w.w1_left = init_matrix(c, c, c, rng);
  w.w1_right = init_matrix(c, c, c, rng);
  w.w2_left = init_matrix(c, c, c, rng);
  w.w2_right = init_matrix(c, c, c, rng);
  w.gamma_left = init_vector(c, 1, rng);
  w.gamma_right = init_vector(c, 1, rng);
  w.tau = tau;
  return w;
}

std::pair<Tensor3, Tensor3> scatm(const Tensor3& xl, const Tensor3& xr,
                                  const SCATMWeights& w) {
  require_same_shape(xl, xr, "scatm");
  const int c = xl.channels();
  if (w.w1_left.cols() != c)
    throw std::invalid_argument("scatm: channel mismatch");

  const Tensor3 bar_l = layer_norm(xl);
  const Tensor3 bar_r = layer_norm(xr);
  Tensor3 out_l = xl, out_r = xr;

  for (int y = 0; y < xl.height(); ++y) {
    const Matrix ql = row_tokens(bar_l, y) * w.w1_left.transpose();
    const Matrix kr = row_tokens(bar_r, y) * w.w1_right.transpose();
    const Matrix vr = row_tokens(xr, y) * w.w2_right.transpose();
    const Matrix vl = row_tokens(xl, y) * w.w2_left.transpose();

    const Matrix f_rl = temperature_attention(ql, kr, vr, w.tau);
    const Matrix f_lr = temperature_attention(kr, ql, vl, w.tau);

    for (int x = 0; x < xl.width(); ++x)
      for (int ch = 0; ch < c; ++ch) {
        out_l(ch, y, x) += w.gamma_left[ch] * f_rl(x, ch);
        out_r(ch, y, x) += w.gamma_right[ch] * f_lr(x, ch);
      }
  }
  return {std::move(out_l), std::move(out_r)};
}

HashBucketing bucketize(const Matrix& vectors, int bucket_count,
                        SeededRng rng) {
  const int c = static_cast<int>(vectors.rows());
  const Eigen::Index n = vectors.cols();
  if (bucket_count < 1 || bucket_count > c)
    throw std::invalid_argument("bucketize: bucket count outside [1, c]");
  if (n < 1) throw std::invalid_argument("bucketize: no vectors");

  // Gram-Schmidt over seeded Gaussian rows.
  Matrix m(bucket_count, c);
  for (int r = 0; r < bucket_count; ++r)
    for (int col = 0; col < c; ++col) m(r, col) = rng.normal();
  for (int r = 0; r < bucket_count; ++r) {
    for (int j = 0; j < r; ++j)
      m.row(r) -= m.row(r).dot(m.row(j)) * m.row(j);
    const double norm = m.row(r).norm();
    if (norm < 1e-12)
      throw std::runtime_error("bucketize: degenerate projection draw");
    m.row(r) /= norm;
  }

  HashBucketing hb;
  hb.projection = std::move(m);
  hb.bucket_count = bucket_count;
  hb.assignment.resize(static_cast<size_t>(n));
  hb.buckets.assign(bucket_count, {});
  const Matrix proj = hb.projection * vectors;  // b x N
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    for (int r = 1; r < bucket_count; ++r)
      if (proj(r, i) > proj(best, i)) best = r;  // lowest index wins ties
    hb.assignment[static_cast<size_t>(i)] = best;
    hb.buckets[best].push_back(static_cast<int>(i));
  }
  return hb;
}

SCGLAWeights SCGLAWeights::zeros(int c, int capacity) {
  SCGLAWeights w;
  w.phi_q = w.phi_k = Matrix::Zero(c, c);
  w.phi_v = Matrix::Zero(c, c);
  w.phi_l = Matrix::Zero(c, c);
  w.scorer_w1 = Matrix::Zero(c, c);
  w.scorer_b1 = Vector::Zero(c);
  w.scorer_w2 = Matrix::Zero(capacity, c);
  w.scorer_b2 = Vector::Zero(capacity);
  return w;
}

SCGLAWeights SCGLAWeights::seeded(int c, int capacity, SeededRng& rng) {
  SCGLAWeights w;
  w.phi_q = init_matrix(c, c, c, rng);
  w.phi_k = init_matrix(c, c, c, rng);
  w.phi_v = init_matrix(c, c, c, rng);
  w.phi_l = init_matrix(c, c, c, rng);
  w.scorer_w1 = init_matrix(c, c, c, rng);
  w.scorer_b1 = init_vector(c, c, rng);
  w.scorer_w2 = init_matrix(capacity, c, c, rng);
  w.scorer_b2 = init_vector(capacity, c, rng);
  return w;
}

Matrix scgla(const Matrix& stereo_feat, const HashBucketing& buckets,
             const SCGLAWeights& w) {
  const Eigen::Index n = stereo_feat.cols();
  if (n < 1) throw std::invalid_argument("scgla: empty feature set");
  if (static_cast<Eigen::Index>(buckets.assignment.size()) != n)
    throw std::invalid_argument("scgla: assignment does not cover columns");

  const int cap = w.capacity();
  Matrix out = Matrix::Zero(w.phi_v.rows(), n);
  for (const std::vector<int>& bucket : buckets.buckets) {
    if (bucket.empty()) continue;
    const int m = static_cast<int>(bucket.size());
    Matrix sub(stereo_feat.rows(), m);
    for (int j = 0; j < m; ++j) sub.col(j) = stereo_feat.col(bucket[j]);

    const Matrix q = w.phi_q * sub;  // e x m
    const Matrix k = w.phi_k * sub;
    const Matrix v = w.phi_v * sub;  // c x m

    // Learned positional scores: column i holds s_l(x_i); components past
    // the scorer capacity contribute zero.
    const int rows = std::min(m, cap);
    Matrix h = (w.scorer_w1 * (w.phi_l * sub)).colwise() + w.scorer_b1;
    h = h.cwiseMax(0.0);
    Matrix sl = Matrix::Zero(m, m);
    sl.topRows(rows) =
        (w.scorer_w2.topRows(rows) * h).colwise() + w.scorer_b2.head(rows);

    const Matrix scores = q.transpose() * k + sl.transpose();
    const Matrix att = softmax_rows(scores);        // m x m
    const Matrix bucket_out = v * att.transpose();  // c x m
    for (int j = 0; j < m; ++j) out.col(bucket[j]) = bucket_out.col(j);
  }
  return out;
}

std::pair<Tensor3, Tensor3> scglam(const Tensor3& fl, const Tensor3& fr,
                                   const SCGLAWeights& w, int bucket_count,
                                   SeededRng rng) {
  require_same_shape(fl, fr, "scglam");
  const Eigen::Index hw =
      static_cast<Eigen::Index>(fl.height()) * fl.width();
  Matrix stereo(fl.channels(), 2 * hw);
  stereo.leftCols(hw) = as_columns(fl);
  stereo.rightCols(hw) = as_columns(fr);

  const HashBucketing buckets = bucketize(stereo, bucket_count, rng);
  const Matrix updated = scgla(stereo, buckets, w);

  Tensor3 out_l = fl, out_r = fr;
  Eigen::Map<Matrix>(out_l.data().data(), fl.channels(), hw) +=
      updated.leftCols(hw);
  Eigen::Map<Matrix>(out_r.data().data(), fr.channels(), hw) +=
      updated.rightCols(hw);
  return {std::move(out_l), std::move(out_r)};
}

void GeneratorConfig::validate() const {
  if (width < 2 || width % 2 != 0)
    throw std::invalid_argument("GeneratorConfig: width must be even >= 2");
  if (scale != 2 && scale != 4)
    throw std::invalid_argument("GeneratorConfig: scale must be 2 or 4");
  if (n_blocks < 0)
    throw std::invalid_argument("GeneratorConfig: negative block count");
  if (bucket_count < 1 || bucket_count > width)
    throw std::invalid_argument(
        "GeneratorConfig: bucket_count outside [1, width]");
  if (tau < 0.0) throw std::invalid_argument("GeneratorConfig: tau < 0");
  if (scorer_capacity < 1)
    throw std::invalid_argument("GeneratorConfig: scorer_capacity < 1");
}

GeneratorWeights GeneratorWeights::build(const GeneratorConfig& cfg) {
  cfg.validate();
  GeneratorWeights w;
  const int c = cfg.width;
  const int out_c = 3 * cfg.scale * cfg.scale;
  if (cfg.zero_init) {
    w.conv_in = Conv3x3::zeros(c, 3);
    for (int i = 0; i < cfg.n_blocks; ++i)
      w.blocks.push_back(
          {NAFBlockWeights::zeros(c), SCATMWeights::zeros(c, cfg.tau)});
    w.scgla = SCGLAWeights::zeros(c, cfg.scorer_capacity);
    w.conv_out = Conv3x3::zeros(out_c, c);
    return w;
  }
  // Fixed topological draw order keeps seeded weights portable.
  SeededRng rng(cfg.seed, 1);
  w.conv_in = Conv3x3::seeded(c, 3, rng);
  for (int i = 0; i < cfg.n_blocks; ++i)
    w.blocks.push_back({NAFBlockWeights::seeded(c, rng),
                        SCATMWeights::seeded(c, cfg.tau, rng)});
  w.scgla = SCGLAWeights::seeded(c, cfg.scorer_capacity, rng);
  w.conv_out = Conv3x3::seeded(out_c, c, rng);
  return w;
}

std::vector<WeightBlob> GeneratorWeights::to_blobs() const {
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
  add_mat("conv_in.w", conv_in.w);
  add_vec("conv_in.b", conv_in.b);
  for (size_t i = 0; i < blocks.size(); ++i) {
    const std::string p = "block" + std::to_string(i) + ".";
    const NAFBlockWeights& n = blocks[i].naf;
    add_vec(p + "ln1_gain", n.ln1_gain);
    add_vec(p + "ln1_bias", n.ln1_bias);
    add_mat(p + "pw_expand", n.pw_expand);
    add_vec(p + "pw_expand_b", n.pw_expand_b);
    add_mat(p + "dw3x3", n.dw3x3);
    add_vec(p + "dw3x3_b", n.dw3x3_b);
    add_mat(p + "ca", n.ca);
    add_vec(p + "ca_b", n.ca_b);
    add_mat(p + "pw_project", n.pw_project);
    add_vec(p + "pw_project_b", n.pw_project_b);
    add_vec(p + "ln2_gain", n.ln2_gain);
    add_vec(p + "ln2_bias", n.ln2_bias);
    add_mat(p + "ffn1", n.ffn1);
    add_vec(p + "ffn1_b", n.ffn1_b);
    add_mat(p + "ffn2", n.ffn2);
    add_vec(p + "ffn2_b", n.ffn2_b);
    add_vec(p + "res1_scale", n.res1_scale);
    add_vec(p + "res2_scale", n.res2_scale);
    const SCATMWeights& s = blocks[i].scatm;
    add_mat(p + "scatm.w1_left", s.w1_left);
    add_mat(p + "scatm.w1_right", s.w1_right);
    add_mat(p + "scatm.w2_left", s.w2_left);
    add_mat(p + "scatm.w2_right", s.w2_right);
    add_vec(p + "scatm.gamma_left", s.gamma_left);
    add_vec(p + "scatm.gamma_right", s.gamma_right);
  }
  add_mat("scgla.phi_q", scgla.phi_q);
  add_mat("scgla.phi_k", scgla.phi_k);
  add_mat("scgla.phi_v", scgla.phi_v);
  add_mat("scgla.phi_l", scgla.phi_l);
  add_mat("scgla.scorer_w1", scgla.scorer_w1);
  add_vec("scgla.scorer_b1", scgla.scorer_b1);
  add_mat("scgla.scorer_w2", scgla.scorer_w2);
  add_vec("scgla.scorer_b2", scgla.scorer_b2);
  add_mat("conv_out.w", conv_out.w);
  add_vec("conv_out.b", conv_out.b);
  return blobs;
}

StereoPair generator_forward(const StereoPair& lr, const GeneratorConfig& cfg,
                             const GeneratorWeights& w) {
  cfg.validate();
  Tensor3 sl = conv3x3_reflect(lr.left, w.conv_in);
  Tensor3 sr = conv3x3_reflect(lr.right, w.conv_in);

  for (const GeneratorWeights::Block& block : w.blocks) {
    Tensor3 xl = naf_block(sl, block.naf);
    Tensor3 xr = naf_block(sr, block.naf);
    std::tie(sl, sr) = scatm(xl, xr, block.scatm);
  }

  std::tie(sl, sr) =
      scglam(sl, sr, w.scgla, cfg.bucket_count, SeededRng(cfg.seed, 2));

  auto reconstruct = [&](const Tensor3& feat, const Tensor3& input) {
    Tensor3 up = pixel_shuffle(conv3x3_reflect(feat, w.conv_out), cfg.scale);
    Tensor3 base = resize(input, input.height() * cfg.scale,
                          input.width() * cfg.scale, ResizeMode::kBilinear);
    base.data() += up.data();
    base.set_image(true);
    base.clamp01();
    return base;
  };
  return StereoPair(reconstruct(sl, lr.left), reconstruct(sr, lr.right));
}

StereoPair generator_forward(const StereoPair& lr,
                             const GeneratorConfig& cfg) {
  return generator_forward(lr, cfg, GeneratorWeights::build(cfg));
}

}  // namespace stereosr
