#include "eyeseg/gradient.hpp"

#include <cmath>

namespace eyeseg {

PixelRect clip_window(const Window& w, int width, int height)
{
    PixelRect r;
    r.x0 = std::max(0, w.center.x + w.lo());
    r.y0 = std::max(0, w.center.y + w.lo());
    r.x1 = std::min(width - 1, w.center.x + w.hi());
    r.y1 = std::min(height - 1, w.center.y + w.hi());
    return r;
}

GradientField sobel_gradients(const GrayImage& image)
{
    const int w = image.width();
    const int h = image.height();
    GradientField field(w, h);
    auto px = [&](int x, int y) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return image.at(x, y);
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double a = px(x - 1, y - 1), b = px(x, y - 1), c = px(x + 1, y - 1);
            const double d = px(x - 1, y), f = px(x + 1, y);
            const double g = px(x - 1, y + 1), k = px(x, y + 1), l = px(x + 1, y + 1);
            field.at(x, y) = Vec2{(c + 2.0 * f + l) - (a + 2.0 * d + g), (g + 2.0 * k + l) - (a + 2.0 * b + c)};
        }
    }
    return field;
}

Raster<double> gradient_magnitudes(const GradientField& field)
{
    Raster<double> out(field.width(), field.height());
    for (std::size_t i = 0; i < field.size(); ++i)
        out[i] = std::sqrt(field[i].norm2());
    return out;
}

double BoxCounter::sum(const PixelRect& r) const
{
    if (r.empty())
        return 0.0;
    const std::size_t stride = static_cast<std::size_t>(width_) + 1;
    const auto at = [&](int x, int y) { return table_[static_cast<std::size_t>(y) * stride + x]; };
    return at(r.x1 + 1, r.y1 + 1) - at(r.x0, r.y1 + 1) - at(r.x1 + 1, r.y0) + at(r.x0, r.y0);
}

} // namespace eyeseg
