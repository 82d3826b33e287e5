#pragma once

#include <vector>

#include "segarena/types.hpp"

namespace segarena::mask {

enum class Connectivity { Four = 4, Eight = 8 };

/// Jaccard index |a∩b| / |a∪b|. Two empty masks compare as 1 so that
/// "no motion observed, no mask predicted" counts as perfect agreement.
/// Throws std::invalid_argument on dimension mismatch.
double iou(const MaskGrid& a, const MaskGrid& b);

/// Maximal connected regions of the set pixels, sorted by descending pixel
/// count (ties keep raster discovery order). Each output grid has the input
/// dimensions; their union equals the input and they are pairwise disjoint.
std::vector<MaskGrid> connected_components(const MaskGrid& m,
                                           Connectivity connectivity);

/// Arithmetic mean of set-pixel coordinates. Throws on an empty mask.
Vec2 centroid(const MaskGrid& m);

struct AxisInfo {
  double angle = 0.0;      // orientation of the dominant eigenvector, [0, pi)
  double eigen_gap = 0.0;  // spread between covariance eigenvalues
};

/// Eigen-decomposition of the 2x2 pixel-coordinate covariance. Isotropic
/// masks (eigen_gap < 1e-9) report angle 0 so the result stays deterministic.
/// Requires at least 2 set pixels.
AxisInfo principal_axis_info(const MaskGrid& m);

/// Orientation of the dominant covariance eigenvector in [0, pi).
double principal_axis(const MaskGrid& m);

/// Pixels inside the square window (side `window`, centred at `center`,
/// clipped to bounds) whose max-over-channels absolute difference between the
/// two images exceeds `threshold`. Everything outside the window is clear.
MaskGrid difference_mask(const Image& a, const Image& b, const Vec2& center,
                         double window, double threshold);

/// Greedy non-max suppression in descending score order: a hypothesis is
/// kept iff its mask IoU with every already kept mask is <= iou_thresh.
/// Score ties break by smaller mask area, then by (x, y) of the centre.
std::vector<Hypothesis> nms(std::vector<Hypothesis> hyps, double iou_thresh);

}  // namespace segarena::mask
