#include "segarena/mask.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace segarena::mask {
namespace {

void require_same_dims(Eigen::Index ar, Eigen::Index ac, Eigen::Index br,
                       Eigen::Index bc, const char* what) {
  if (ar != br || ac != bc) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  }
}

}  // namespace

double iou(const MaskGrid& a, const MaskGrid& b) {
  require_same_dims(a.rows(), a.cols(), b.rows(), b.cols(), "iou");
  const auto inter = (a && b).count();
  const auto uni = (a || b).count();
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<MaskGrid> connected_components(const MaskGrid& m,
                                           Connectivity connectivity) {
  const Eigen::Index h = m.rows();
  const Eigen::Index w = m.cols();
  Grid<int> label = Grid<int>::Constant(h, w, -1);
  std::vector<MaskGrid> comps;
  std::vector<std::int64_t> sizes;
  std::vector<Eigen::Index> stack;

  const int dx4[] = {1, -1, 0, 0};
  const int dy4[] = {0, 0, 1, -1};
  const int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
  const int dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
  const int nn = connectivity == Connectivity::Four ? 4 : 8;
  const int* dx = connectivity == Connectivity::Four ? dx4 : dx8;
  const int* dy = connectivity == Connectivity::Four ? dy4 : dy8;

  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      if (!m(y, x) || label(y, x) >= 0) continue;
      const int id = static_cast<int>(comps.size());
      comps.emplace_back(MaskGrid::Constant(h, w, false));
      sizes.push_back(0);
      stack.push_back(y * w + x);
      label(y, x) = id;
      while (!stack.empty()) {
        const Eigen::Index idx = stack.back();
        stack.pop_back();
        const Eigen::Index cy = idx / w;
        const Eigen::Index cx = idx % w;
        comps[id](cy, cx) = true;
        ++sizes[id];
        for (int k = 0; k < nn; ++k) {
          const Eigen::Index ny = cy + dy[k];
          const Eigen::Index nx = cx + dx[k];
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          if (!m(ny, nx) || label(ny, nx) >= 0) continue;
          label(ny, nx) = id;
          stack.push_back(ny * w + nx);
        }
      }
    }
  }

  std::vector<std::size_t> order(comps.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return sizes[i] > sizes[j]; });
  std::vector<MaskGrid> out;
  out.reserve(comps.size());
  for (const std::size_t i : order) out.push_back(std::move(comps[i]));
  return out;
}

Vec2 centroid(const MaskGrid& m) {
  double sx = 0.0, sy = 0.0;
  std::int64_t n = 0;
  for (Eigen::Index y = 0; y < m.rows(); ++y) {
    for (Eigen::Index x = 0; x < m.cols(); ++x) {
      if (m(y, x)) {
        sx += static_cast<double>(x);
        sy += static_cast<double>(y);
        ++n;
      }
    }
  }
  if (n == 0) throw std::invalid_argument("centroid: empty mask");
  return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

AxisInfo principal_axis_info(const MaskGrid& m) {
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  std::int64_t n = 0;
  for (Eigen::Index y = 0; y < m.rows(); ++y) {
    for (Eigen::Index x = 0; x < m.cols(); ++x) {
      if (!m(y, x)) continue;
      const auto fx = static_cast<double>(x);
      const auto fy = static_cast<double>(y);
      sx += fx;
      sy += fy;
      sxx += fx * fx;
      syy += fy * fy;
      sxy += fx * fy;
      ++n;
    }
  }
  if (n < 2) throw std::invalid_argument("principal_axis: needs >= 2 pixels");
  const double fn = static_cast<double>(n);
  const double mx = sx / fn;
  const double my = sy / fn;
  Eigen::Matrix2d cov;
  cov << sxx / fn - mx * mx, sxy / fn - mx * my,  //
      sxy / fn - mx * my, syy / fn - my * my;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  AxisInfo info;
  info.eigen_gap = eig.eigenvalues()(1) - eig.eigenvalues()(0);
  if (info.eigen_gap < 1e-9) {
    info.angle = 0.0;  // symmetric blob: any axis works, pick a fixed one
    return info;
  }
  const Eigen::Vector2d v = eig.eigenvectors().col(1);
  double angle = std::atan2(v.y(), v.x());
  if (angle < 0.0) angle += M_PI;
  if (angle >= M_PI) angle -= M_PI;
  info.angle = angle;
  return info;
}

double principal_axis(const MaskGrid& m) { return principal_axis_info(m).angle; }

MaskGrid difference_mask(const Image& a, const Image& b, const Vec2& center,
                         double window, double threshold) {
  if (!a.same_dims(b)) {
    throw std::invalid_argument("difference_mask: dimension mismatch");
  }
  if (window <= 0.0) {
    throw std::invalid_argument("difference_mask: window must be positive");
  }
  const Eigen::Index h = a.height();
  const Eigen::Index w = a.width();
  MaskGrid out = MaskGrid::Constant(h, w, false);

  const double half = window / 2.0;
  const auto x0 = static_cast<Eigen::Index>(std::max(0.0, std::ceil(center.x() - half)));
  const auto y0 = static_cast<Eigen::Index>(std::max(0.0, std::ceil(center.y() - half)));
  const auto x1 = std::min<Eigen::Index>(w, static_cast<Eigen::Index>(std::ceil(center.x() + half)));
  const auto y1 = std::min<Eigen::Index>(h, static_cast<Eigen::Index>(std::ceil(center.y() + half)));

  for (Eigen::Index y = y0; y < y1; ++y) {
    for (Eigen::Index x = x0; x < x1; ++x) {
      const double d = std::max({std::abs(a.r(y, x) - b.r(y, x)),
                                 std::abs(a.g(y, x) - b.g(y, x)),
                                 std::abs(a.b(y, x) - b.b(y, x))});
      if (d > threshold) out(y, x) = true;
    }
  }
  return out;
}

std::vector<Hypothesis> nms(std::vector<Hypothesis> hyps, double iou_thresh) {
  if (iou_thresh < 0.0 || iou_thresh > 1.0) {
    throw std::invalid_argument("nms: iou_thresh outside [0,1]");
  }
  std::vector<std::int64_t> areas(hyps.size());
  for (std::size_t i = 0; i < hyps.size(); ++i) areas[i] = mask_area(hyps[i].mask);

  std::vector<std::size_t> order(hyps.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (hyps[i].score != hyps[j].score) return hyps[i].score > hyps[j].score;
    if (areas[i] != areas[j]) return areas[i] < areas[j];
    if (hyps[i].center.x() != hyps[j].center.x())
      return hyps[i].center.x() < hyps[j].center.x();
    if (hyps[i].center.y() != hyps[j].center.y())
      return hyps[i].center.y() < hyps[j].center.y();
    return hyps[i].scale < hyps[j].scale;
  });

  std::vector<Hypothesis> kept;
  for (const std::size_t i : order) {
    bool suppressed = false;
    for (const Hypothesis& k : kept) {
      if (iou(hyps[i].mask, k.mask) > iou_thresh) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(std::move(hyps[i]));
  }
  return kept;
}

}  // namespace segarena::mask
