#include "eyeseg/ray_fan.hpp"

#include <cmath>
#include <numbers>

namespace eyeseg {

RayFan::RayFan(const PixelPoint& origin, int ray_count, int width, int height)
    : origin_(origin), width_(width), height_(height)
{
    if (ray_count < 8)
        throw Error("ray fan needs at least 8 rays");
    if (!(origin.x >= -0.5 && origin.y >= -0.5 && origin.x < width - 0.5 && origin.y < height - 0.5))
        throw Error("ray fan origin outside the image");
    dirs_.resize(static_cast<std::size_t>(ray_count));
    samples_.resize(static_cast<std::size_t>(ray_count));
    for (int i = 0; i < ray_count; ++i) {
        const double a = 2.0 * std::numbers::pi * i / ray_count;
        dirs_[static_cast<std::size_t>(i)] = Vec2{std::cos(a), std::sin(a)};
        auto& s = samples_[static_cast<std::size_t>(i)];
        for (int t = 0;; ++t) {
            const PixelIndex p = nearest_pixel(point_at(i, t));
            if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height)
                break;
            s.push_back(p);
        }
    }
}

double RayFan::angle(int ray) const
{
    return 2.0 * std::numbers::pi * ray / ray_count();
}

PixelPoint RayFan::point_at(int ray, double t) const
{
    const auto& d = dirs_[static_cast<std::size_t>(ray)];
    return {origin_.x + t * d.x, origin_.y + t * d.y};
}

int RayFan::wrap(int ray) const
{
    const int n = ray_count();
    return ((ray % n) + n) % n;
}

} // namespace eyeseg
