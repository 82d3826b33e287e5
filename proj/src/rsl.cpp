#include "segarena/rsl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace segarena::rsl {
namespace {

void check_inputs(const LogitGrid& q, const MaskGrid& m, const RslConfig& cfg) {
  if (q.rows() != m.rows() || q.cols() != m.cols()) {
    throw std::invalid_argument("rsl: logit/mask dimension mismatch");
  }
  if (!m.any()) throw std::invalid_argument("rsl: noisy mask is empty");
  if (!(cfg.b > 0.0) || cfg.b > 1.0) {
    throw std::invalid_argument("rsl: IoU margin b outside (0,1]");
  }
}

}  // namespace

double sigmoid(double logit) { return 1.0 / (1.0 + std::exp(-logit)); }

double bce_term(double logit, bool target) {
  // softplus(logit) - target*logit, evaluated without overflow
  const double sp = std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
  return sp - (target ? logit : 0.0);
}

LatentResult infer_latent(const LogitGrid& q, const MaskGrid& m,
                          const RslConfig& cfg) {
  check_inputs(q, m, cfg);

  LatentResult res;
  res.latent = (q > 0.0).eval();  // bias-0 argmax

  // Running IoU bookkeeping against m.
  std::int64_t inter = 0, uni = 0;
  struct Flip {
    double margin;
    Eigen::Index idx;
  };
  std::vector<Flip> flips;  // pixels where the argmax disagrees with m
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const bool on = res.latent.data()[i];
    const bool in_m = m.data()[i];
    if (on && in_m) ++inter;
    if (on || in_m) ++uni;
    if (on != in_m) flips.push_back({std::abs(q.data()[i]), i});
  }
  res.iou = static_cast<double>(inter) / static_cast<double>(uni);
  res.bias = 0.0;
  if (res.iou >= cfg.b) return res;

  std::sort(flips.begin(), flips.end(), [](const Flip& a, const Flip& b) {
    if (a.margin != b.margin) return a.margin < b.margin;
    return a.idx < b.idx;
  });

  // Flip whole equal-margin groups: within the common-bias family a single
  // bias value toggles all of them at once.
  std::size_t i = 0;
  while (i < flips.size()) {
    const double margin = flips[i].margin;
    std::size_t j = i;
    while (j < flips.size() && flips[j].margin == margin) {
      const Eigen::Index idx = flips[j].idx;
      const bool in_m = m.data()[idx];
      res.latent.data()[idx] = in_m;
      if (in_m) {
        ++inter;  // pixel already counted in the union via m
      } else {
        --uni;  // removed a prediction-only pixel
      }
      ++j;
    }
    res.bias = margin;
    res.iou = static_cast<double>(inter) / static_cast<double>(uni);
    i = j;
    if (res.iou >= cfg.b) return res;
  }
  // All disagreements flipped: latent == m, IoU is exactly 1.
  return res;
}

double rsl_loss(const LogitGrid& q, const MaskGrid& m, const RslConfig& cfg) {
  const LatentResult lat = infer_latent(q, m, cfg);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    sum += bce_term(q.data()[i], lat.latent.data()[i]);
  }
  return sum / static_cast<double>(q.size());
}

Plane rsl_gradient(const LogitGrid& q, const MaskGrid& m,
                   const RslConfig& cfg) {
  const LatentResult lat = infer_latent(q, m, cfg);
  Plane grad(q.rows(), q.cols());
  const double inv_n = 1.0 / static_cast<double>(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    grad.data()[i] =
        (sigmoid(q.data()[i]) - (lat.latent.data()[i] ? 1.0 : 0.0)) * inv_n;
  }
  return grad;
}

double cross_entropy(const LogitGrid& q, const MaskGrid& m) {
  if (q.rows() != m.rows() || q.cols() != m.cols()) {
    throw std::invalid_argument("cross_entropy: dimension mismatch");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    sum += bce_term(q.data()[i], m.data()[i]);
  }
  return sum / static_cast<double>(q.size());
}

Plane cross_entropy_gradient(const LogitGrid& q, const MaskGrid& m) {
  if (q.rows() != m.rows() || q.cols() != m.cols()) {
    throw std::invalid_argument("cross_entropy_gradient: dimension mismatch");
  }
  Plane grad(q.rows(), q.cols());
  const double inv_n = 1.0 / static_cast<double>(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    grad.data()[i] =
        (sigmoid(q.data()[i]) - (m.data()[i] ? 1.0 : 0.0)) * inv_n;
  }
  return grad;
}

}  // namespace segarena::rsl
