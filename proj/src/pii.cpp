#include "eyeseg/pii.hpp"

#include <cmath>
#include <cstdint>

namespace eyeseg {

void PiiParams::validate() const
{
    if (window_side < 1)
        throw Error("window side must be >= 1");
    if (!(agreement > 0.0 && agreement <= 1.0))
        throw Error("agreement threshold must lie in (0, 1]");
    if (pulse_width < 1)
        throw Error("pulse width must be >= 1");
    if (ray_count < 8)
        throw Error("ray count must be >= 8");
}

Raster<std::uint8_t> outward_gradient_flags(const GradientField& field, const PixelPoint& origin)
{
    Raster<std::uint8_t> flags(field.width(), field.height(), 0);
    const PixelIndex o = nearest_pixel(origin);
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            if (x == o.x && y == o.y)
                continue;
            const Vec2& g = field.at(x, y);
            if (g.x == 0.0 && g.y == 0.0)
                continue;
            const Vec2 v{x - origin.x, y - origin.y};
            flags.at(x, y) = g.dot(v) > 0.0;
        }
    }
    return flags;
}

GradientField filter_radial_gradients(const GradientField& field, const PixelPoint& origin, const PiiParams& params)
{
    params.validate();
    const BoxCounter counts(outward_gradient_flags(field, origin));
    GradientField out(field.width(), field.height());
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            const PixelRect r = clip_window(Window{{x, y}, params.window_side}, field.width(), field.height());
            const double frac = counts.sum(r) / static_cast<double>(r.area());
            if (frac > params.agreement)
                out.at(x, y) = field.at(x, y);
        }
    }
    const PixelIndex o = nearest_pixel(origin);
    if (out.contains(o.x, o.y))
        out.at(o.x, o.y) = Vec2{};
    return out;
}

std::pair<int, int> pulse_support(int tau)
{
    if (tau < 1)
        throw Error("pulse width must be >= 1");
    if (tau % 2 == 1)
        return {-(tau - 1) / 2, (tau - 1) / 2};
    return {-tau / 2 + 1, tau / 2};
}

std::vector<double> convolve_ray_pulse(std::span<const double> magnitudes, int tau)
{
    const auto [lo, hi] = pulse_support(tau);
    const int n = static_cast<int>(magnitudes.size());
    std::vector<double> out(magnitudes.size(), 0.0);
    // r*(t) = sum over m in [lo, hi] of r(t - m), i.e. a window [t - hi, t - lo].
    for (int t = 0; t < n; ++t) {
        double s = 0.0;
        for (int j = std::max(0, t - hi); j <= std::min(n - 1, t - lo); ++j)
            s += magnitudes[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(t)] = s;
    }
    return out;
}

RaySegmentLabel extract_ray_segments(std::span<const double> convolved, int ray)
{
    RaySegmentLabel seg;
    seg.ray = ray;
    seg.length = static_cast<int>(convolved.size());

    int mids[2] = {0, 0};
    int found = 0;
    const int n = seg.length;
    for (int t = 0; t < n && found < 2;) {
        if (convolved[static_cast<std::size_t>(t)] > kRunFloor) {
            const int start = t;
            while (t < n && convolved[static_cast<std::size_t>(t)] > kRunFloor)
                ++t;
            mids[found++] = (start + t - 1) / 2;
        } else {
            ++t;
        }
    }
    if (found == 2 && mids[0] > 0) {
        seg.pupil_end = mids[0];
        seg.iris_end = mids[1];
        seg.status = RayStatus::Labeled;
    }
    return seg;
}

std::vector<RaySegmentLabel> statistical_ray_filter(std::vector<RaySegmentLabel> segments)
{
    long long n = 0;
    long long sum = 0;
    for (const auto& s : segments) {
        if (s.labeled()) {
            ++n;
            sum += s.iris_length();
        }
    }
    if (n < 2) {
        for (auto& s : segments)
            s.status = RayStatus::Ignored;
        return segments;
    }
    // |l - mean| <= std  <=>  n * d_i^2 <= sum_j d_j^2 with d = n*l - sum, exact in integers.
    long double total = 0;
    for (const auto& s : segments) {
        if (s.labeled()) {
            const long double d = static_cast<long double>(n * s.iris_length() - sum);
            total += d * d;
        }
    }
    for (auto& s : segments) {
        if (!s.labeled())
            continue;
        const long double d = static_cast<long double>(n * s.iris_length() - sum);
        if (static_cast<long double>(n) * d * d > total)
            s.status = RayStatus::Ignored;
    }
    return segments;
}

IndicationMap rasterize_pupil_iris(const RayFan& fan, std::span<const RaySegmentLabel> segments)
{
    LabelCanvas canvas(fan.width(), fan.height());
    for (const auto& seg : segments) {
        if (!seg.labeled())
            continue;
        const auto samples = fan.samples(seg.ray);
        for (int t = 0; t < static_cast<int>(samples.size()); ++t) {
            Label l;
            if (t < seg.pupil_end)
                l = Label::Pupil;
            else if (t < seg.iris_end)
                l = Label::Iris;
            else if (t > seg.iris_end)
                l = Label::Background;
            else
                continue;
            canvas.put(samples[static_cast<std::size_t>(t)].x, samples[static_cast<std::size_t>(t)].y, l);
        }
    }
    return canvas.finish();
}

std::size_t PiiResult::labeled_rays() const
{
    std::size_t n = 0;
    for (const auto& s : segments)
        n += s.labeled();
    return n;
}

PiiResult generate_pupil_iris_indications(const GrayImage& image, const PixelPoint& origin, const PiiParams& params)
{
    params.validate();
    if (!image.contains(nearest_pixel(origin).x, nearest_pixel(origin).y))
        throw Error("origin lies outside the image");
    const GradientField filtered = filter_radial_gradients(sobel_gradients(image), origin, params);
    const Raster<double> mags = gradient_magnitudes(filtered);

    RayFan fan(origin, params.ray_count, image.width(), image.height());
    std::vector<RaySegmentLabel> segments;
    segments.reserve(static_cast<std::size_t>(fan.ray_count()));
    for (int i = 0; i < fan.ray_count(); ++i) {
        const auto along = sample_ray(mags, fan, i);
        segments.push_back(extract_ray_segments(convolve_ray_pulse(along, params.pulse_width), i));
    }
    segments = statistical_ray_filter(std::move(segments));
    IndicationMap map = rasterize_pupil_iris(fan, segments);
    return PiiResult{std::move(map), std::move(fan), std::move(segments)};
}

} // namespace eyeseg
