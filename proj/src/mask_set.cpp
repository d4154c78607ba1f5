#include "eyeseg/mask_set.hpp"

namespace eyeseg {

namespace {

template <typename Op>
Mask combine(const Mask& a, const Mask& b, Op op, const char* what)
{
    require_same_shape(a, b, what);
    Mask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = op(a[i] != 0, b[i] != 0) ? 1 : 0;
    return out;
}

} // namespace

Mask mask_union(const Mask& a, const Mask& b)
{
    return combine(a, b, [](bool x, bool y) { return x || y; }, "mask_union");
}

Mask mask_intersection(const Mask& a, const Mask& b)
{
    return combine(a, b, [](bool x, bool y) { return x && y; }, "mask_intersection");
}

Mask mask_difference(const Mask& a, const Mask& b)
{
    return combine(a, b, [](bool x, bool y) { return x && !y; }, "mask_difference");
}

bool mask_subset(const Mask& inner, const Mask& outer)
{
    require_same_shape(inner, outer, "mask_subset");
    for (std::size_t i = 0; i < inner.size(); ++i)
        if (inner[i] && !outer[i])
            return false;
    return true;
}

bool masks_nested(const MaskSet& m)
{
    if (!mask_subset(m.pupil, m.eye) || !mask_subset(m.iris, m.eye))
        return false;
    for (std::size_t i = 0; i < m.pupil.size(); ++i)
        if (m.pupil[i] && m.iris[i])
            return false;
    return true;
}

namespace io {

const std::vector<Rgb>& mask_palette()
{
    static const std::vector<Rgb> palette = {
        {0, 0, 0},
        {220, 30, 30},
        {20, 40, 160},
        {40, 200, 60},
    };
    return palette;
}

Raster<std::uint8_t> mask_set_to_classes(const MaskSet& m)
{
    require_same_shape(m.pupil, m.eye, "mask set");
    require_same_shape(m.iris, m.eye, "mask set");
    Raster<std::uint8_t> out(m.width(), m.height(), 0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (m.pupil[i])
            out[i] = static_cast<std::uint8_t>(MaskClass::Pupil);
        else if (m.iris[i])
            out[i] = static_cast<std::uint8_t>(MaskClass::Iris);
        else if (m.eye[i])
            out[i] = static_cast<std::uint8_t>(MaskClass::Eye);
    }
    return out;
}

MaskSet mask_set_from_classes(const Raster<std::uint8_t>& classes)
{
    MaskSet m = MaskSet::empty(classes.width(), classes.height());
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const auto c = classes[i];
        if (c > static_cast<std::uint8_t>(MaskClass::Eye))
            throw Error("mask PNG holds class index " + std::to_string(c));
        m.pupil[i] = c == static_cast<std::uint8_t>(MaskClass::Pupil);
        m.iris[i] = c == static_cast<std::uint8_t>(MaskClass::Iris);
        m.eye[i] = c != 0;
    }
    return m;
}

Bytes encode_mask_set_png(const MaskSet& m)
{
    return encode_indexed_png(mask_set_to_classes(m), mask_palette());
}

MaskSet decode_mask_set_png(const Bytes& bytes)
{
    return mask_set_from_classes(decode_indexed_png(bytes));
}

} // namespace io

} // namespace eyeseg
