#pragma once

#include "compforge/manifest.hpp"

namespace compforge::geometry {

/// Integer aspect match against a w x h reference: the height is the floored
/// width-scaled height, or the width is the floored height-scaled width.
bool aspect_matches(int cw, int ch, int w, int h);

/// Largest rectangle inside a parent_w x parent_h image that has the aspect of
/// `good` (per aspect_matches), fully contains `good`, and whose center is
/// nearest the parent center. Remaining ties go to smaller y, then x, then w.
/// Throws DomainError if `good` is not inside the parent.
CropRect containing_crop(int parent_w, int parent_h, const CropRect& good);

}  // namespace compforge::geometry
