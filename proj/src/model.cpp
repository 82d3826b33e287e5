#include "segarena/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "segarena/mask.hpp"
#include "segarena/resample.hpp"
#include "segarena/rsl.hpp"

namespace segarena::model {
namespace {

// Feature maps are (channels x pixels) matrices, pixels row-major.

void im2col(const Matrix& in, int h, int w, int k, Matrix& cols) {
  const auto c = static_cast<int>(in.rows());
  const int pad = (k - 1) / 2;
  cols.resize(static_cast<Eigen::Index>(c) * k * k, static_cast<Eigen::Index>(h) * w);
  for (int ci = 0; ci < c; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Eigen::Index row = (static_cast<Eigen::Index>(ci) * k + ky) * k + kx;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - pad;
          for (int x = 0; x < w; ++x) {
            const int sx = x + kx - pad;
            const bool ok = sy >= 0 && sy < h && sx >= 0 && sx < w;
            cols(row, static_cast<Eigen::Index>(y) * w + x) =
                ok ? in(ci, static_cast<Eigen::Index>(sy) * w + sx) : 0.0;
          }
        }
      }
    }
  }
}

void col2im_accum(const Matrix& dcols, int h, int w, int k, Matrix& dimg) {
  const auto c = dimg.rows();
  const int pad = (k - 1) / 2;
  dimg.setZero();
  for (Eigen::Index ci = 0; ci < c; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Eigen::Index row = (ci * k + ky) * k + kx;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= h) continue;
          for (int x = 0; x < w; ++x) {
            const int sx = x + kx - pad;
            if (sx < 0 || sx >= w) continue;
            dimg(ci, static_cast<Eigen::Index>(sy) * w + sx) +=
                dcols(row, static_cast<Eigen::Index>(y) * w + x);
          }
        }
      }
    }
  }
}

void maxpool2(const Matrix& in, int h, int w, Matrix& out, Grid<int>& idx) {
  const auto c = in.rows();
  const int oh = h / 2, ow = w / 2;
  out.resize(c, static_cast<Eigen::Index>(oh) * ow);
  idx.resize(c, static_cast<Eigen::Index>(oh) * ow);
  for (Eigen::Index ci = 0; ci < c; ++ci) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double best = -1e300;
        int best_src = 0;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int src = (2 * y + dy) * w + (2 * x + dx);
            const double v = in(ci, src);
            if (v > best) {
              best = v;
              best_src = src;
            }
          }
        }
        out(ci, static_cast<Eigen::Index>(y) * ow + x) = best;
        idx(ci, static_cast<Eigen::Index>(y) * ow + x) = best_src;
      }
    }
  }
}

void unpool2(const Matrix& dout, const Grid<int>& idx, Eigen::Index in_pixels,
             Matrix& din) {
  din.resize(dout.rows(), in_pixels);
  din.setZero();
  for (Eigen::Index ci = 0; ci < dout.rows(); ++ci) {
    for (Eigen::Index p = 0; p < dout.cols(); ++p) {
      din(ci, idx(ci, p)) += dout(ci, p);
    }
  }
}

struct Workspace {
  Matrix x0;
  Matrix cols1, z1, a1, pool1;
  Matrix cols2, z2, a2, pool2;
  Matrix cols3, z3, a3, pool3;
  Grid<int> idx1, idx2, idx3;
  Vector feat;
  Vector mask_coarse;
  // backward scratch
  Matrix d_pool3, d_a3, d_z3, d_cols3;
  Matrix d_pool2, d_a2, d_z2, d_cols2;
  Matrix d_pool1, d_a1, d_z1;
  Vector d_feat, d_coarse;
};

Workspace& workspace() {
  static thread_local Workspace ws;
  return ws;
}

void image_to_input(const Image& patch, Matrix& x0) {
  const Eigen::Index n = patch.r.size();
  x0.resize(3, n);
  for (int c = 0; c < 3; ++c) {
    const Plane& p = patch.channel(c);
    for (Eigen::Index i = 0; i < n; ++i) x0(c, i) = p.data()[i];
  }
}

/// Trunk + heads; caches stay in ws for the backward pass.
double forward_trunk(const ModelParams& mp, Workspace& ws) {
  const ArchConfig& a = mp.arch;
  const int p = a.patch;
  im2col(ws.x0, p, p, a.kernel, ws.cols1);
  ws.z1.noalias() = mp.conv1.W * ws.cols1;
  ws.z1.colwise() += mp.conv1.b;
  ws.a1 = ws.z1.cwiseMax(0.0);
  maxpool2(ws.a1, p, p, ws.pool1, ws.idx1);

  const int p2 = p / 2;
  im2col(ws.pool1, p2, p2, a.kernel, ws.cols2);
  ws.z2.noalias() = mp.conv2.W * ws.cols2;
  ws.z2.colwise() += mp.conv2.b;
  ws.a2 = ws.z2.cwiseMax(0.0);
  maxpool2(ws.a2, p2, p2, ws.pool2, ws.idx2);

  const int p4 = p / 4;
  im2col(ws.pool2, p4, p4, a.kernel, ws.cols3);
  ws.z3.noalias() = mp.conv3.W * ws.cols3;
  ws.z3.colwise() += mp.conv3.b;
  ws.a3 = ws.z3.cwiseMax(0.0);
  maxpool2(ws.a3, p4, p4, ws.pool3, ws.idx3);

  ws.feat = Eigen::Map<const Vector>(ws.pool3.data(), a.feature_dim());
  ws.mask_coarse.noalias() = mp.mask_w * ws.feat;
  ws.mask_coarse += mp.mask_b;
  return mp.score_w.dot(ws.feat) + mp.score_b;
}

LogitGrid upsample_coarse(const Vector& coarse, const ArchConfig& a) {
  const int g = a.mask_grid;
  const int u = a.upsample_factor();
  LogitGrid out(a.patch, a.patch);
  for (int y = 0; y < a.patch; ++y) {
    for (int x = 0; x < a.patch; ++x) {
      out(y, x) = coarse((y / u) * g + (x / u));
    }
  }
  return out;
}

Vector downsample_grad(const Plane& dfull, const ArchConfig& a) {
  const int g = a.mask_grid;
  const int u = a.upsample_factor();
  Vector out = Vector::Zero(static_cast<Eigen::Index>(g) * g);
  for (int y = 0; y < a.patch; ++y) {
    for (int x = 0; x < a.patch; ++x) {
      out((y / u) * g + (x / u)) += dfull(y, x);
    }
  }
  return out;
}

struct Gradients {
  ConvLayer conv1, conv2, conv3;
  Vector score_w;
  double score_b = 0.0;
  Matrix mask_w;
  Vector mask_b;

  void zero_like(const ModelParams& p) {
    const auto init = [](ConvLayer& g, const ConvLayer& src) {
      g.W = Matrix::Zero(src.W.rows(), src.W.cols());
      g.b = Vector::Zero(src.b.size());
    };
    init(conv1, p.conv1);
    init(conv2, p.conv2);
    init(conv3, p.conv3);
    score_w = Vector::Zero(p.score_w.size());
    score_b = 0.0;
    mask_w = Matrix::Zero(p.mask_w.rows(), p.mask_w.cols());
    mask_b = Vector::Zero(p.mask_b.size());
  }
};

/// Backprop one example; dlogit and d_coarse carry their batch weights.
void backward_example(const ModelParams& mp, Workspace& ws, double dlogit,
                      const Vector* d_coarse, Gradients& g) {
  const ArchConfig& a = mp.arch;
  ws.d_feat.noalias() = mp.score_w * dlogit;
  g.score_w.noalias() += dlogit * ws.feat;
  g.score_b += dlogit;
  if (d_coarse != nullptr) {
    ws.d_feat.noalias() += mp.mask_w.transpose() * (*d_coarse);
    g.mask_w.noalias() += (*d_coarse) * ws.feat.transpose();
    g.mask_b += *d_coarse;
  }

  const int p = a.patch, p2 = p / 2, p4 = p / 4;
  ws.d_pool3 = Eigen::Map<const Matrix>(ws.d_feat.data(), a.c3,
                                        static_cast<Eigen::Index>(a.pooled_side()) *
                                            a.pooled_side());
  unpool2(ws.d_pool3, ws.idx3, ws.a3.cols(), ws.d_a3);
  ws.d_z3 = ws.d_a3.cwiseProduct((ws.z3.array() > 0.0).cast<double>().matrix());
  g.conv3.W.noalias() += ws.d_z3 * ws.cols3.transpose();
  g.conv3.b += ws.d_z3.rowwise().sum();
  ws.d_cols3.noalias() = mp.conv3.W.transpose() * ws.d_z3;
  ws.d_pool2.resize(a.c2, static_cast<Eigen::Index>(p4) * p4);
  col2im_accum(ws.d_cols3, p4, p4, a.kernel, ws.d_pool2);

  unpool2(ws.d_pool2, ws.idx2, ws.a2.cols(), ws.d_a2);
  ws.d_z2 = ws.d_a2.cwiseProduct((ws.z2.array() > 0.0).cast<double>().matrix());
  g.conv2.W.noalias() += ws.d_z2 * ws.cols2.transpose();
  g.conv2.b += ws.d_z2.rowwise().sum();
  ws.d_cols2.noalias() = mp.conv2.W.transpose() * ws.d_z2;
  ws.d_pool1.resize(a.c1, static_cast<Eigen::Index>(p2) * p2);
  col2im_accum(ws.d_cols2, p2, p2, a.kernel, ws.d_pool1);

  unpool2(ws.d_pool1, ws.idx1, ws.a1.cols(), ws.d_a1);
  ws.d_z1 = ws.d_a1.cwiseProduct((ws.z1.array() > 0.0).cast<double>().matrix());
  g.conv1.W.noalias() += ws.d_z1 * ws.cols1.transpose();
  g.conv1.b += ws.d_z1.rowwise().sum();
  // no input gradient needed
}

void check_patch(const ModelParams& params, const pseudo::TrainingExample& ex) {
  if (ex.patch_size != params.arch.patch) {
    throw std::invalid_argument("train: example patch size mismatch");
  }
}

struct BatchPass {
  Losses losses;
  Gradients grads;
};

/// Shared forward(+optional backward) sweep over a batch.
Losses run_batch(const ModelParams& params, const TrainBatch& batch,
                 const LossSpec& loss, Gradients* grads) {
  if (batch.examples.empty()) {
    throw std::invalid_argument("train: empty batch");
  }
  Workspace& ws = workspace();
  Losses out;
  int positives = 0;
  for (const auto* ex : batch.examples) {
    check_patch(params, *ex);
    if (ex->positive) ++positives;
  }
  const double inv_b = 1.0 / static_cast<double>(batch.examples.size());
  const double inv_p = positives > 0 ? 1.0 / positives : 0.0;
  const rsl::RslConfig rsl_cfg{loss.rsl_b};

  for (const auto* ex : batch.examples) {
    image_to_input(ex->patch_image(), ws.x0);
    const double logit = forward_trunk(params, ws);
    const double y = ex->positive ? 1.0 : 0.0;
    out.score_loss += rsl::bce_term(logit, ex->positive) * inv_b;
    const double dlogit = (rsl::sigmoid(logit) - y) * inv_b;

    const Vector* d_coarse_ptr = nullptr;
    if (ex->positive) {
      const LogitGrid full = upsample_coarse(ws.mask_coarse, params.arch);
      const MaskGrid target = ex->mask_grid();
      Plane dfull;
      if (loss.mode == LossMode::CE) {
        out.mask_loss += rsl::cross_entropy(full, target) * inv_p;
        if (grads != nullptr) dfull = rsl::cross_entropy_gradient(full, target);
      } else {
        out.mask_loss += rsl::rsl_loss(full, target, rsl_cfg) * inv_p;
        if (grads != nullptr) dfull = rsl::rsl_gradient(full, target, rsl_cfg);
      }
      if (grads != nullptr) {
        ws.d_coarse = downsample_grad(dfull, params.arch) * inv_p;
        d_coarse_ptr = &ws.d_coarse;
      }
    }
    if (grads != nullptr) backward_example(params, ws, dlogit, d_coarse_ptr, *grads);
  }
  return out;
}

// --- little-endian binary helpers -----------------------------------------

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void put_matrix(std::ostream& out, const Matrix& m) {
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) put_f64(out, m.data()[i]);
}

Matrix get_matrix(std::istream& in) {
  const auto rows = static_cast<Eigen::Index>(get_u64(in));
  const auto cols = static_cast<Eigen::Index>(get_u64(in));
  if (rows < 0 || cols < 0 || rows * cols > (1ll << 28)) {
    throw std::runtime_error("checkpoint: implausible tensor shape");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = get_f64(in);
  return m;
}

void put_vector(std::ostream& out, const Vector& v) {
  put_u64(out, static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v(i));
}

Vector get_vector(std::istream& in) {
  const auto n = static_cast<Eigen::Index>(get_u64(in));
  if (n < 0 || n > (1ll << 28)) {
    throw std::runtime_error("checkpoint: implausible vector size");
  }
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = get_f64(in);
  return v;
}

constexpr std::uint32_t kMagic = 0x4b434753;   // "SGCK"
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kEndianTag = 0x01020304;

}  // namespace

// ---------------------------------------------------------------------------

ArchConfig ArchConfig::from_config(const Config& cfg) {
  ArchConfig a;
  a.patch = cfg.get_int("model.patch");
  const auto ch = cfg.get_int_list("model.channels");
  if (ch.size() != 3) {
    throw std::invalid_argument("model.channels must list three values");
  }
  a.c1 = ch[0];
  a.c2 = ch[1];
  a.c3 = ch[2];
  a.kernel = cfg.get_int("model.kernel");
  a.mask_grid = cfg.get_int("model.mask_grid");
  a.init_sigma_scale = cfg.get_double("model.init_sigma_scale");
  a.validate();
  return a;
}

void ArchConfig::validate() const {
  if (patch <= 0 || patch % 8 != 0) {
    throw std::invalid_argument("arch: patch must be a positive multiple of 8");
  }
  if (mask_grid <= 0 || patch % mask_grid != 0) {
    throw std::invalid_argument("arch: mask_grid must divide patch");
  }
  if (kernel < 1 || kernel % 2 == 0) {
    throw std::invalid_argument("arch: kernel must be odd");
  }
  if (c1 < 1 || c2 < 1 || c3 < 1) {
    throw std::invalid_argument("arch: channel counts must be positive");
  }
}

bool ModelParams::all_finite() const {
  const auto ok = [](const Matrix& m) { return m.allFinite(); };
  return ok(conv1.W) && conv1.b.allFinite() && ok(conv2.W) &&
         conv2.b.allFinite() && ok(conv3.W) && conv3.b.allFinite() &&
         score_w.allFinite() && std::isfinite(score_b) && ok(mask_w) &&
         mask_b.allFinite();
}

SgdState SgdState::zeros_like(const ModelParams& p) {
  SgdState s;
  const auto init = [](ConvLayer& g, const ConvLayer& src) {
    g.W = Matrix::Zero(src.W.rows(), src.W.cols());
    g.b = Vector::Zero(src.b.size());
  };
  init(s.conv1, p.conv1);
  init(s.conv2, p.conv2);
  init(s.conv3, p.conv3);
  s.score_w = Vector::Zero(p.score_w.size());
  s.score_b = 0.0;
  s.mask_w = Matrix::Zero(p.mask_w.rows(), p.mask_w.cols());
  s.mask_b = Vector::Zero(p.mask_b.size());
  return s;
}

ModelParams init_params(Rng& rng, const ArchConfig& arch) {
  arch.validate();
  ModelParams p;
  p.arch = arch;
  const auto fill = [&](Matrix& m, double sigma) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = rng.normal(0.0, sigma);
    }
  };
  const auto conv = [&](ConvLayer& l, int in_c, int out_c) {
    const int fan_in = in_c * arch.kernel * arch.kernel;
    l.W.resize(out_c, fan_in);
    fill(l.W, arch.init_sigma_scale * std::sqrt(2.0 / fan_in));
    l.b = Vector::Zero(out_c);
  };
  conv(p.conv1, 3, arch.c1);
  conv(p.conv2, arch.c1, arch.c2);
  conv(p.conv3, arch.c2, arch.c3);
  const int f = arch.feature_dim();
  const double head_sigma = arch.init_sigma_scale * std::sqrt(1.0 / f);
  p.score_w.resize(f);
  for (Eigen::Index i = 0; i < f; ++i) p.score_w(i) = rng.normal(0.0, head_sigma);
  p.score_b = 0.0;
  p.mask_w.resize(static_cast<Eigen::Index>(arch.mask_grid) * arch.mask_grid, f);
  fill(p.mask_w, head_sigma);
  p.mask_b = Vector::Zero(p.mask_w.rows());
  return p;
}

Forward forward(const ModelParams& params, const Image& patch) {
  if (patch.width() != params.arch.patch || patch.height() != params.arch.patch) {
    throw std::invalid_argument("forward: patch size mismatch");
  }
  Workspace& ws = workspace();
  image_to_input(patch, ws.x0);
  Forward f;
  f.score_logit = forward_trunk(params, ws);
  f.score = rsl::sigmoid(f.score_logit);
  f.mask_logits = upsample_coarse(ws.mask_coarse, params.arch);
  return f;
}

Losses batch_loss(const ModelParams& params, const TrainBatch& batch,
                  const LossSpec& loss) {
  return run_batch(params, batch, loss, nullptr);
}

Losses train_step(ModelParams& params, SgdState& sgd, const TrainBatch& batch,
                  double lr, double momentum, const LossSpec& loss) {
  Gradients grads;
  grads.zero_like(params);
  const Losses losses = run_batch(params, batch, loss, &grads);
  if (!std::isfinite(losses.score_loss) || !std::isfinite(losses.mask_loss)) {
    throw std::runtime_error(
        "train_step: non-finite loss (score=" + std::to_string(losses.score_loss) +
        ", mask=" + std::to_string(losses.mask_loss) + ") at step " +
        std::to_string(params.step));
  }

  const auto apply = [&](auto& p, auto& v, const auto& g) {
    v = momentum * v + g;
    p -= lr * v;
  };
  apply(params.conv1.W, sgd.conv1.W, grads.conv1.W);
  apply(params.conv1.b, sgd.conv1.b, grads.conv1.b);
  apply(params.conv2.W, sgd.conv2.W, grads.conv2.W);
  apply(params.conv2.b, sgd.conv2.b, grads.conv2.b);
  apply(params.conv3.W, sgd.conv3.W, grads.conv3.W);
  apply(params.conv3.b, sgd.conv3.b, grads.conv3.b);
  apply(params.score_w, sgd.score_w, grads.score_w);
  sgd.score_b = momentum * sgd.score_b + grads.score_b;
  params.score_b -= lr * sgd.score_b;
  apply(params.mask_w, sgd.mask_w, grads.mask_w);
  apply(params.mask_b, sgd.mask_b, grads.mask_b);
  params.step += 1;
  return losses;
}

// ---------------------------------------------------------------------------

double pyramid_scale(int index) { return std::exp2(0.25 * index - 1.25); }

int PyramidParams::stride() const {
  return std::max(1, static_cast<int>(std::lround(stride_frac * patch)));
}

std::vector<PyramidLevel> build_pyramid(int width, int height,
                                        const PyramidParams& params) {
  std::vector<PyramidLevel> levels;
  const int stride = params.stride();
  for (const int i : params.scale_indices) {
    PyramidLevel lvl;
    lvl.scale_index = i;
    lvl.scale = pyramid_scale(i);
    lvl.scaled_w = static_cast<int>(std::lround(width * lvl.scale));
    lvl.scaled_h = static_cast<int>(std::lround(height * lvl.scale));
    if (lvl.scaled_w < params.patch || lvl.scaled_h < params.patch) continue;
    const double half = params.patch / 2.0;
    for (int y0 = 0; y0 + params.patch <= lvl.scaled_h; y0 += stride) {
      for (int x0 = 0; x0 + params.patch <= lvl.scaled_w; x0 += stride) {
        lvl.centers.emplace_back(x0 + half, y0 + half);
      }
    }
    levels.push_back(std::move(lvl));
  }
  return levels;
}

InferParams InferParams::from_config(const Config& cfg,
                                     const std::string& prefix) {
  InferParams ip;
  ip.pyramid.patch = cfg.get_int("model.patch");
  if (prefix == "loop") {
    ip.pyramid.stride_frac = cfg.get_double("loop.stride_frac");
    ip.pyramid.scale_indices = cfg.get_int_list("loop.scale_indices");
    ip.score_thresh = cfg.get_double("loop.score_thresh");
    ip.nms_thresh = cfg.get_double("loop.nms_thresh");
  } else {
    ip.pyramid.stride_frac = cfg.get_double("model.stride_frac");
    ip.pyramid.scale_indices = cfg.get_int_list("model.scale_indices");
    ip.score_thresh = cfg.get_double("eval.score_thresh");
    ip.nms_thresh = cfg.get_double("eval.nms_thresh");
  }
  return ip;
}

std::vector<Hypothesis> infer_segments(const ModelParams& params,
                                       const Image& image,
                                       const InferParams& infer) {
  const int patch = params.arch.patch;
  const int w = image.width(), h = image.height();
  std::vector<Hypothesis> hyps;
  Image scaled_patch(patch, patch);

  for (const PyramidLevel& lvl : build_pyramid(w, h, infer.pyramid)) {
    const Image scaled = (lvl.scaled_w == w && lvl.scaled_h == h)
                             ? image
                             : resize_bilinear(image, lvl.scaled_w, lvl.scaled_h);
    const double rx = static_cast<double>(lvl.scaled_w) / w;
    const double ry = static_cast<double>(lvl.scaled_h) / h;
    for (const Vec2& center : lvl.centers) {
      const int x0 = static_cast<int>(std::lround(center.x() - patch / 2.0));
      const int y0 = static_cast<int>(std::lround(center.y() - patch / 2.0));
      for (int c = 0; c < 3; ++c) {
        scaled_patch.channel(c) =
            scaled.channel(c).block(y0, x0, patch, patch);
      }
      const Forward f = forward(params, scaled_patch);
      if (f.score <= infer.score_thresh) continue;

      // Project the binarized patch mask back to full-image pixels.
      MaskGrid full = MaskGrid::Constant(h, w, false);
      bool any = false;
      const int fx0 = std::max(0, static_cast<int>(std::floor(x0 / rx)) - 1);
      const int fy0 = std::max(0, static_cast<int>(std::floor(y0 / ry)) - 1);
      const int fx1 = std::min(w - 1, static_cast<int>(std::ceil((x0 + patch) / rx)) + 1);
      const int fy1 = std::min(h - 1, static_cast<int>(std::ceil((y0 + patch) / ry)) + 1);
      for (int y = fy0; y <= fy1; ++y) {
        const auto sy = static_cast<int>(std::lround((y + 0.5) * ry - 0.5)) - y0;
        if (sy < 0 || sy >= patch) continue;
        for (int x = fx0; x <= fx1; ++x) {
          const auto sx = static_cast<int>(std::lround((x + 0.5) * rx - 0.5)) - x0;
          if (sx < 0 || sx >= patch) continue;
          if (f.mask_logits(sy, sx) > 0.0) {
            full(y, x) = true;
            any = true;
          }
        }
      }
      if (!any) continue;

      Hypothesis hyp;
      hyp.mask = std::move(full);
      hyp.score = f.score;
      hyp.center = {(center.x() + 0.5) / rx - 0.5, (center.y() + 0.5) / ry - 0.5};
      hyp.scale = lvl.scale;
      hyps.push_back(std::move(hyp));
    }
  }
  return mask::nms(std::move(hyps), infer.nms_thresh);
}

// ---------------------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path,
                     const ModelParams& params, const SgdState& sgd) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  put_u32(out, kMagic);
  put_u32(out, kVersion);
  put_u32(out, kEndianTag);
  put_u32(out, static_cast<std::uint32_t>(params.arch.patch));
  put_u32(out, static_cast<std::uint32_t>(params.arch.c1));
  put_u32(out, static_cast<std::uint32_t>(params.arch.c2));
  put_u32(out, static_cast<std::uint32_t>(params.arch.c3));
  put_u32(out, static_cast<std::uint32_t>(params.arch.kernel));
  put_u32(out, static_cast<std::uint32_t>(params.arch.mask_grid));
  put_f64(out, params.arch.init_sigma_scale);
  put_u64(out, static_cast<std::uint64_t>(params.step));

  const auto tensors = [&](const auto& side) {
    put_matrix(out, side.conv1.W);
    put_vector(out, side.conv1.b);
    put_matrix(out, side.conv2.W);
    put_vector(out, side.conv2.b);
    put_matrix(out, side.conv3.W);
    put_vector(out, side.conv3.b);
    put_vector(out, side.score_w);
    put_f64(out, side.score_b);
    put_matrix(out, side.mask_w);
    put_vector(out, side.mask_b);
  };
  tensors(params);
  tensors(sgd);
  if (!out) throw std::runtime_error("short write on checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  if (get_u32(in) != kMagic) {
    throw std::runtime_error("bad checkpoint magic in " + path.string());
  }
  if (get_u32(in) != kVersion) {
    throw std::runtime_error("unsupported checkpoint version in " + path.string());
  }
  if (get_u32(in) != kEndianTag) {
    throw std::runtime_error("bad endian tag in " + path.string());
  }
  Checkpoint ck;
  ck.params.arch.patch = static_cast<int>(get_u32(in));
  ck.params.arch.c1 = static_cast<int>(get_u32(in));
  ck.params.arch.c2 = static_cast<int>(get_u32(in));
  ck.params.arch.c3 = static_cast<int>(get_u32(in));
  ck.params.arch.kernel = static_cast<int>(get_u32(in));
  ck.params.arch.mask_grid = static_cast<int>(get_u32(in));
  ck.params.arch.init_sigma_scale = get_f64(in);
  ck.params.step = static_cast<std::int64_t>(get_u64(in));
  ck.params.arch.validate();

  const auto tensors = [&](auto& side) {
    side.conv1.W = get_matrix(in);
    side.conv1.b = get_vector(in);
    side.conv2.W = get_matrix(in);
    side.conv2.b = get_vector(in);
    side.conv3.W = get_matrix(in);
    side.conv3.b = get_vector(in);
    side.score_w = get_vector(in);
    side.score_b = get_f64(in);
    side.mask_w = get_matrix(in);
    side.mask_b = get_vector(in);
  };
  tensors(ck.params);
  tensors(ck.sgd);
  if (!in) throw std::runtime_error("truncated checkpoint " + path.string());
  return ck;
}

}  // namespace segarena::model
