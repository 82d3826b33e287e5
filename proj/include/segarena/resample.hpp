#pragma once

#include "segarena/types.hpp"

namespace segarena {

/// Bilinear resize; samples outside the source clamp to the edge.
Image resize_bilinear(const Image& src, int out_w, int out_h);

/// Nearest-neighbour mask resize (keeps masks binary).
MaskGrid resize_mask_nn(const MaskGrid& src, int out_w, int out_h);

/// Square crop of side `crop_size` centred at `center`, resampled to
/// out_size x out_size. Bilinear with edge replication outside the image.
Image crop_resample(const Image& src, const Vec2& center, double crop_size,
                    int out_size);

/// Same geometry as crop_resample but nearest-neighbour; samples outside the
/// source are background (false).
MaskGrid crop_resample_mask(const MaskGrid& src, const Vec2& center,
                            double crop_size, int out_size);

/// Rescale content about the patch centre by `factor`, keeping the patch
/// size (factor > 1 zooms in). Bilinear for images, NN for masks.
Image rescale_about_center(const Image& patch, double factor);
MaskGrid rescale_about_center_mask(const MaskGrid& patch, double factor);

}  // namespace segarena
