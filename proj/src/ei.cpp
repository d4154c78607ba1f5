#include "eyeseg/ei.hpp"

#include <cmath>
#include <random>

namespace eyeseg {

void EiParams::validate() const
{
    if (window_side < 1)
        throw Error("k* must be >= 1");
    if (!(gstd_threshold > 0.0))
        throw Error("gstd threshold must be positive");
    if (!(smooth_fraction > 0.0 && smooth_fraction < 0.5))
        throw Error("smooth fraction must lie in (0, 0.5)");
    if (grid < 1)
        throw Error("grid size must be >= 1");
    if (neighborhood < 1)
        throw Error("boundary neighbourhood must be >= 1");
    if (!(derivative_threshold > 0.0))
        throw Error("derivative threshold must be positive");
}

SmoothnessMap gstd_map(const GradientField& field, const EiParams& params)
{
    params.validate();
    const Raster<double> mags = gradient_magnitudes(field);
    SmoothnessMap out{Raster<double>(field.width(), field.height()), Mask(field.width(), field.height())};
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            const PixelRect r = clip_window(Window{{x, y}, params.window_side}, field.width(), field.height());
            double sum = 0.0;
            for (int yy = r.y0; yy <= r.y1; ++yy)
                for (int xx = r.x0; xx <= r.x1; ++xx)
                    sum += mags.at(xx, yy);
            const double n = static_cast<double>(r.area());
            const double mean = sum / n;
            double var = 0.0;
            for (int yy = r.y0; yy <= r.y1; ++yy)
                for (int xx = r.x0; xx <= r.x1; ++xx) {
                    const double d = mags.at(xx, yy) - mean;
                    var += d * d;
                }
            const double g = std::sqrt(var / n);
            out.gstd.at(x, y) = g;
            out.smooth.at(x, y) = g < params.gstd_threshold;
        }
    }
    return out;
}

IndicationMap initial_eye_indication(const SmoothnessMap& smooth, const MaskSet& pupil_iris, const RayFan& fan,
                                     double smooth_fraction)
{
    const Mask region = mask_union(pupil_iris.pupil, pupil_iris.iris);
    require_same_shape(region, smooth.smooth, "initial_eye_indication");
    if (count_set(region) == 0)
        throw Error("initial eye indication needs a non-empty pupil/iris region");

    LabelCanvas canvas(region.width(), region.height());
    for (int y = 0; y < region.height(); ++y)
        for (int x = 0; x < region.width(); ++x)
            if (region.at(x, y))
                canvas.force(x, y, Label::EyeFg);

    std::vector<int> smooth_samples;
    for (int i = 0; i < fan.ray_count(); ++i) {
        const auto s = fan.samples(i);
        const int n = static_cast<int>(s.size());
        int t = 0;
        while (t < n && !region.at(s[t].x, s[t].y))
            ++t;
        while (t < n && region.at(s[t].x, s[t].y))
            ++t;
        if (t >= n)
            continue; // never entered, or never left the region

        smooth_samples.clear();
        for (; t < n; ++t)
            if (smooth.smooth.at(s[t].x, s[t].y))
                smooth_samples.push_back(t);
        const int total = static_cast<int>(smooth_samples.size());
        const int part = static_cast<int>(std::floor(smooth_fraction * total));
        for (int j = 0; j < part; ++j) {
            const auto& fg = s[smooth_samples[j]];
            canvas.put(fg.x, fg.y, Label::EyeFg);
            const auto& bg = s[smooth_samples[total - 1 - j]];
            canvas.put(bg.x, bg.y, Label::EyeBg);
        }
    }
    return canvas.finish();
}

std::vector<PixelIndex> PromptSet::positives() const
{
    std::vector<PixelIndex> out;
    for (const auto& p : prompts)
        if (p.positive)
            out.push_back(p.at);
    return out;
}

std::vector<PixelIndex> PromptSet::negatives() const
{
    std::vector<PixelIndex> out;
    for (const auto& p : prompts)
        if (!p.positive)
            out.push_back(p.at);
    return out;
}

int grid_cell(int x, int y, int width, int height, int n)
{
    const int cw = std::max(1, width / n);
    const int ch = std::max(1, height / n);
    const int cx = std::min(n - 1, x / cw);
    const int cy = std::min(n - 1, y / ch);
    return cy * n + cx;
}

PromptSet grid_prompts(const IndicationMap& indication, int n, std::uint64_t seed)
{
    if (n < 1)
        throw Error("grid size must be >= 1");
    const int cells = n * n;
    std::vector<std::vector<PixelIndex>> pos(static_cast<std::size_t>(cells));
    std::vector<std::vector<PixelIndex>> neg(static_cast<std::size_t>(cells));
    for (int y = 0; y < indication.height(); ++y) {
        for (int x = 0; x < indication.width(); ++x) {
            const Label l = indication.at(x, y);
            const auto c = static_cast<std::size_t>(grid_cell(x, y, indication.width(), indication.height(), n));
            if (l == Label::EyeFg)
                pos[c].push_back({x, y});
            else if (l == Label::EyeBg || l == Label::Background)
                neg[c].push_back({x, y});
        }
    }
    PromptSet set;
    set.grid = n;
    std::mt19937_64 rng(seed);
    for (int c = 0; c < cells; ++c) {
        const auto& p = pos[static_cast<std::size_t>(c)];
        const auto& q = neg[static_cast<std::size_t>(c)];
        if (p.empty() && q.empty())
            continue;
        const bool positive = p.size() > q.size();
        const auto& pool = positive ? p : q;
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        set.prompts.push_back(Prompt{pool[pick(rng)], positive, c});
    }
    return set;
}

std::size_t BoundaryPointSet::present() const
{
    std::size_t n = 0;
    for (const auto& p : points)
        n += p.has_value();
    return n;
}

std::size_t BoundaryPointSet::retained() const
{
    std::size_t n = 0;
    for (const auto& p : points)
        n += p && p->retained;
    return n;
}

namespace {

BoundaryPoint make_point(const RayFan& fan, int ray, int t)
{
    const PixelIndex px = fan.samples(ray)[static_cast<std::size_t>(t)];
    const double dx = px.x - fan.origin().x;
    const double dy = px.y - fan.origin().y;
    return BoundaryPoint{t, px, std::sqrt(dx * dx + dy * dy), true};
}

} // namespace

BoundaryPointSet extract_boundary(const Mask& oracle_mask, const RayFan& fan)
{
    if (oracle_mask.width() != fan.width() || oracle_mask.height() != fan.height())
        throw Error("extract_boundary: mask and fan dimensions differ");
    BoundaryPointSet out;
    out.points.resize(static_cast<std::size_t>(fan.ray_count()));
    for (int i = 0; i < fan.ray_count(); ++i) {
        const auto s = fan.samples(i);
        const int n = static_cast<int>(s.size());
        if (n == 0 || !oracle_mask.at(s[0].x, s[0].y))
            continue;
        int t = 1;
        while (t < n && oracle_mask.at(s[t].x, s[t].y))
            ++t;
        if (t >= n)
            continue;
        out.points[static_cast<std::size_t>(i)] = make_point(fan, i, t - 1);
    }
    return out;
}

std::vector<std::optional<double>> second_differences(const BoundaryPointSet& points)
{
    const int n = static_cast<int>(points.points.size());
    std::vector<std::optional<double>> d2(points.points.size());
    for (int i = 0; i < n; ++i) {
        const auto& prev = points.points[static_cast<std::size_t>((i - 1 + n) % n)];
        const auto& cur = points.points[static_cast<std::size_t>(i)];
        const auto& next = points.points[static_cast<std::size_t>((i + 1) % n)];
        if (prev && cur && next)
            d2[static_cast<std::size_t>(i)] = next->distance - 2.0 * cur->distance + prev->distance;
    }
    return d2;
}

BoundaryPointSet second_derivative_filter(BoundaryPointSet points, const EiParams& params)
{
    params.validate();
    const int n = static_cast<int>(points.points.size());
    if (n == 0)
        return points;
    const auto d2 = second_differences(points);
    // Prefix counts of "bad" indices over the ray circle for O(N) window queries.
    std::vector<int> prefix(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i) {
        const auto& v = d2[static_cast<std::size_t>(i)];
        const bool bad = !v || std::abs(*v) > params.derivative_threshold;
        prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] + (bad ? 1 : 0);
    }
    const auto bad_in = [&](int lo, int hi) { // inclusive, 0 <= lo <= hi < n
        return prefix[static_cast<std::size_t>(hi) + 1] - prefix[static_cast<std::size_t>(lo)];
    };
    const int half = params.neighborhood / 2;
    for (int i = 0; i < n; ++i) {
        auto& p = points.points[static_cast<std::size_t>(i)];
        if (!p)
            continue;
        int bad = 0;
        if (2 * half + 1 >= n) {
            bad = bad_in(0, n - 1);
        } else {
            const int lo = i - half;
            const int hi = i + half;
            if (lo < 0)
                bad = bad_in(0, hi) + bad_in(lo + n, n - 1);
            else if (hi >= n)
                bad = bad_in(lo, n - 1) + bad_in(0, hi - n);
            else
                bad = bad_in(lo, hi);
        }
        p->retained = bad == 0;
    }
    return points;
}

IndicationMap refined_indication(const BoundaryPointSet& retained, const RayFan& fan)
{
    LabelCanvas canvas(fan.width(), fan.height());
    const int n = std::min(fan.ray_count(), static_cast<int>(retained.points.size()));
    for (int i = 0; i < n; ++i) {
        const auto& p = retained.points[static_cast<std::size_t>(i)];
        if (!p || !p->retained)
            continue;
        const auto s = fan.samples(i);
        for (int t = 0; t < static_cast<int>(s.size()); ++t)
            canvas.put(s[t].x, s[t].y, t <= p->sample ? Label::EyeFg : Label::EyeBg);
    }
    return canvas.finish();
}

BoundaryPointSet boundary_from_indication(const IndicationMap& indication, const RayFan& fan)
{
    BoundaryPointSet out;
    out.points.resize(static_cast<std::size_t>(fan.ray_count()));
    for (int i = 0; i < fan.ray_count(); ++i) {
        const auto s = fan.samples(i);
        int last_fg = -1;
        int first_bg = -1;
        for (int t = 0; t < static_cast<int>(s.size()); ++t) {
            const Label l = indication.at(s[t].x, s[t].y);
            if (l == Label::EyeFg) {
                last_fg = t;
            } else if (l == Label::EyeBg && last_fg >= 0) {
                first_bg = t;
                break;
            }
        }
        if (last_fg >= 0 && first_bg > last_fg)
            out.points[static_cast<std::size_t>(i)] = make_point(fan, i, (last_fg + first_bg) / 2);
    }
    return out;
}

} // namespace eyeseg
