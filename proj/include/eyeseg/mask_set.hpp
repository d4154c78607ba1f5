#pragma once

#include "eyeseg/io.hpp"
#include "eyeseg/raster.hpp"

namespace eyeseg {

/// Dense pupil / iris / eye masks of one image. In densified and rendered
/// outputs `iris` excludes the pupil and `eye` covers both.
struct MaskSet
{
    Mask pupil;
    Mask iris;
    Mask eye;

    static MaskSet empty(int width, int height)
    {
        return {Mask(width, height, 0), Mask(width, height, 0), Mask(width, height, 0)};
    }

    int width() const { return eye.width(); }
    int height() const { return eye.height(); }

    friend bool operator==(const MaskSet&, const MaskSet&) = default;
};

/// Palette indices of the on-disk mask format.
enum class MaskClass : std::uint8_t
{
    Background = 0,
    Pupil = 1,
    Iris = 2,
    Eye = 3, ///< eye region minus pupil and iris
};

Mask mask_union(const Mask& a, const Mask& b);
Mask mask_intersection(const Mask& a, const Mask& b);
Mask mask_difference(const Mask& a, const Mask& b);
bool mask_subset(const Mask& inner, const Mask& outer);

/// pupil, iris and eye pairwise consistent: pupil and iris disjoint, both inside eye.
bool masks_nested(const MaskSet& m);

namespace io {

const std::vector<Rgb>& mask_palette();

/// Pupil wins over iris wins over eye when classes overlap.
Raster<std::uint8_t> mask_set_to_classes(const MaskSet& m);
MaskSet mask_set_from_classes(const Raster<std::uint8_t>& classes);

Bytes encode_mask_set_png(const MaskSet& m);
MaskSet decode_mask_set_png(const Bytes& bytes);

} // namespace io

} // namespace eyeseg
