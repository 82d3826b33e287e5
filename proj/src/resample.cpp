#include "segarena/resample.hpp"

#include <algorithm>
#include <cmath>

namespace segarena {
namespace {

double sample_clamped(const Plane& p, double x, double y) {
  const auto w = p.cols();
  const auto h = p.rows();
  const double cx = std::min(std::max(x, 0.0), static_cast<double>(w - 1));
  const double cy = std::min(std::max(y, 0.0), static_cast<double>(h - 1));
  const auto x0 = static_cast<Eigen::Index>(std::floor(cx));
  const auto y0 = static_cast<Eigen::Index>(std::floor(cy));
  const auto x1 = std::min(x0 + 1, w - 1);
  const auto y1 = std::min(y0 + 1, h - 1);
  const double fx = cx - static_cast<double>(x0);
  const double fy = cy - static_cast<double>(y0);
  return (p(y0, x0) * (1 - fx) + p(y0, x1) * fx) * (1 - fy) +
         (p(y1, x0) * (1 - fx) + p(y1, x1) * fx) * fy;
}

bool sample_nn(const MaskGrid& m, double x, double y) {
  const auto xi = static_cast<Eigen::Index>(std::lround(x));
  const auto yi = static_cast<Eigen::Index>(std::lround(y));
  if (xi < 0 || yi < 0 || xi >= m.cols() || yi >= m.rows()) return false;
  return m(yi, xi);
}

}  // namespace

Image resize_bilinear(const Image& src, int out_w, int out_h) {
  Image out(out_w, out_h);
  const double sx = static_cast<double>(src.width()) / out_w;
  const double sy = static_cast<double>(src.height()) / out_h;
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const double u = (x + 0.5) * sx - 0.5;
      const double v = (y + 0.5) * sy - 0.5;
      out.r(y, x) = sample_clamped(src.r, u, v);
      out.g(y, x) = sample_clamped(src.g, u, v);
      out.b(y, x) = sample_clamped(src.b, u, v);
    }
  }
  return out;
}

MaskGrid resize_mask_nn(const MaskGrid& src, int out_w, int out_h) {
  MaskGrid out(out_h, out_w);
  const double sx = static_cast<double>(src.cols()) / out_w;
  const double sy = static_cast<double>(src.rows()) / out_h;
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      out(y, x) = sample_nn(src, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
    }
  }
  return out;
}

Image crop_resample(const Image& src, const Vec2& center, double crop_size,
                    int out_size) {
  Image out(out_size, out_size);
  const double step = crop_size / out_size;
  const double ox = center.x() - crop_size / 2.0;
  const double oy = center.y() - crop_size / 2.0;
  for (int y = 0; y < out_size; ++y) {
    for (int x = 0; x < out_size; ++x) {
      const double u = ox + (x + 0.5) * step - 0.5;
      const double v = oy + (y + 0.5) * step - 0.5;
      out.r(y, x) = sample_clamped(src.r, u, v);
      out.g(y, x) = sample_clamped(src.g, u, v);
      out.b(y, x) = sample_clamped(src.b, u, v);
    }
  }
  return out;
}

MaskGrid crop_resample_mask(const MaskGrid& src, const Vec2& center,
                            double crop_size, int out_size) {
  MaskGrid out(out_size, out_size);
  const double step = crop_size / out_size;
  const double ox = center.x() - crop_size / 2.0;
  const double oy = center.y() - crop_size / 2.0;
  for (int y = 0; y < out_size; ++y) {
    for (int x = 0; x < out_size; ++x) {
      out(y, x) = sample_nn(src, ox + (x + 0.5) * step - 0.5,
                            oy + (y + 0.5) * step - 0.5);
    }
  }
  return out;
}

Image rescale_about_center(const Image& patch, double factor) {
  const int n = patch.width();
  const double c = (n - 1) / 2.0;
  Image out(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double u = c + (x - c) / factor;
      const double v = c + (y - c) / factor;
      out.r(y, x) = sample_clamped(patch.r, u, v);
      out.g(y, x) = sample_clamped(patch.g, u, v);
      out.b(y, x) = sample_clamped(patch.b, u, v);
    }
  }
  return out;
}

MaskGrid rescale_about_center_mask(const MaskGrid& patch, double factor) {
  const auto n = patch.cols();
  const double c = static_cast<double>(n - 1) / 2.0;
  MaskGrid out(n, n);
  for (Eigen::Index y = 0; y < n; ++y) {
    for (Eigen::Index x = 0; x < n; ++x) {
      out(y, x) = sample_nn(patch, c + (static_cast<double>(x) - c) / factor,
                            c + (static_cast<double>(y) - c) / factor);
    }
  }
  return out;
}

}  // namespace segarena
