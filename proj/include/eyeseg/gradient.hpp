#pragma once

#include "eyeseg/raster.hpp"

#include <algorithm>
#include <cstdint>

namespace eyeseg {

/// Per-pixel Sobel response (gx, gy); same dimensions as the source image.
using GradientField = Raster<Vec2>;

/// Square window of side `side` centred on a pixel. For even sides the extra
/// column/row lies on the negative side: offsets [-side/2, side - 1 - side/2].
struct Window
{
    PixelIndex center;
    int side = 1;

    int lo() const { return -(side / 2); }
    int hi() const { return side - 1 - side / 2; }
};

/// Pixel rectangle [x0, x1] x [y0, y1], inclusive.
struct PixelRect
{
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;

    bool empty() const { return x1 < x0 || y1 < y0; }
    long long area() const { return empty() ? 0 : static_cast<long long>(x1 - x0 + 1) * (y1 - y0 + 1); }
};

/// The part of `w` that lies inside a width x height image.
PixelRect clip_window(const Window& w, int width, int height);

/// 3x3 Sobel with replicate padding.
GradientField sobel_gradients(const GrayImage& image);

Raster<double> gradient_magnitudes(const GradientField& field);

/// Fraction of pixels of the clipped window for which `pred(x, y)` holds.
/// Throws when the window does not intersect the field.
template <typename Pred>
double window_fraction_satisfying(const GradientField& field, const Window& window, Pred&& pred)
{
    const PixelRect r = clip_window(window, field.width(), field.height());
    if (r.empty())
        throw Error("window does not intersect the image");
    long long hits = 0;
    for (int y = r.y0; y <= r.y1; ++y)
        for (int x = r.x0; x <= r.x1; ++x)
            hits += pred(x, y) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(r.area());
}

/// Summed-area table; box sums in O(1).
class BoxCounter
{
public:
    template <typename T>
    explicit BoxCounter(const Raster<T>& values);

    /// Sum over the clipped window.
    double sum(const PixelRect& r) const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> table_; // (width+1) x (height+1)
};

template <typename T>
BoxCounter::BoxCounter(const Raster<T>& values)
    : width_(values.width()), height_(values.height()),
      table_(static_cast<std::size_t>(values.width() + 1) * (values.height() + 1), 0.0)
{
    const std::size_t stride = static_cast<std::size_t>(width_) + 1;
    for (int y = 0; y < height_; ++y) {
        double row = 0.0;
        for (int x = 0; x < width_; ++x) {
            row += static_cast<double>(values.at(x, y));
            table_[(y + 1) * stride + (x + 1)] = table_[y * stride + (x + 1)] + row;
        }
    }
}

} // namespace eyeseg
