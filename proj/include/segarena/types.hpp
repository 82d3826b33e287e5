#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace segarena {

/// Dense row-major pixel grid; rows index y, columns index x.
template <class T>
using Grid = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-pixel boolean occupancy. The shared currency of the whole system:
/// pseudo-labels, predictions and ground truth are all MaskGrids.
using MaskGrid = Grid<bool>;

/// Per-pixel real values: image channels, difference magnitudes, gradients.
using Plane = Grid<double>;

/// Per-pixel pre-sigmoid scores emitted by the mask head.
using LogitGrid = Grid<double>;

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Three-channel image with intensities in [0, 1].
struct Image {
  Plane r, g, b;

  Image() = default;
  Image(int width, int height)
      : r(Plane::Zero(height, width)),
        g(Plane::Zero(height, width)),
        b(Plane::Zero(height, width)) {}

  int width() const { return static_cast<int>(r.cols()); }
  int height() const { return static_cast<int>(r.rows()); }

  const Plane& channel(int c) const { return c == 0 ? r : (c == 1 ? g : b); }
  Plane& channel(int c) { return c == 0 ? r : (c == 1 ? g : b); }

  bool same_dims(const Image& o) const {
    return width() == o.width() && height() == o.height();
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.same_dims(b) && (a.r == b.r).all() && (a.g == b.g).all() &&
           (a.b == b.b).all();
  }
};

/// A proposed object: full-image mask plus the score and the patch placement
/// that produced it.
struct Hypothesis {
  MaskGrid mask;
  double score = 0.0;
  Vec2 center = Vec2::Zero();  // patch centre in full-image coordinates
  double scale = 1.0;          // pyramid scale the patch was taken at
};

inline std::int64_t mask_area(const MaskGrid& m) {
  return m.count();
}

}  // namespace segarena
