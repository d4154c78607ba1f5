#pragma once

#include "eyeseg/raster.hpp"

#include <span>
#include <vector>

namespace eyeseg {

/// N rays from one origin covering [0, 2pi) uniformly. Ray i points along
/// angle 2*pi*i/N (x right, y down). Samples are taken at unit steps,
/// sample t sitting at the pixel nearest to origin + t * direction; a ray
/// ends at its last in-image sample.
class RayFan
{
public:
    RayFan(const PixelPoint& origin, int ray_count, int width, int height);

    const PixelPoint& origin() const { return origin_; }
    int ray_count() const { return static_cast<int>(dirs_.size()); }
    int width() const { return width_; }
    int height() const { return height_; }

    double angle(int ray) const;
    const Vec2& direction(int ray) const { return dirs_[static_cast<std::size_t>(ray)]; }

    /// Number of samples T on ray `ray`.
    int length(int ray) const { return static_cast<int>(samples_[static_cast<std::size_t>(ray)].size()); }
    std::span<const PixelIndex> samples(int ray) const { return samples_[static_cast<std::size_t>(ray)]; }

    /// Continuous position at distance t along a ray.
    PixelPoint point_at(int ray, double t) const;

    /// Wraps any integer ray index into [0, N).
    int wrap(int ray) const;

private:
    PixelPoint origin_;
    int width_;
    int height_;
    std::vector<Vec2> dirs_;
    std::vector<std::vector<PixelIndex>> samples_;
};

/// Values of `field` read along one ray.
template <typename T>
std::vector<T> sample_ray(const Raster<T>& field, const RayFan& fan, int ray)
{
    const auto s = fan.samples(ray);
    std::vector<T> out;
    out.reserve(s.size());
    for (const auto& p : s)
        out.push_back(field.at(p.x, p.y));
    return out;
}

} // namespace eyeseg
