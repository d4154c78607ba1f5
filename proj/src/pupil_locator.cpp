#include "eyeseg/pupil_locator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace eyeseg {

std::vector<int> LocatorParams::scaled_radii(int image_width) const
{
    std::vector<int> out;
    for (int r : radii)
        out.push_back(std::max(2, static_cast<int>(std::lround(r * image_width / 640.0))));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

GrayImage adaptive_lighten(const GrayImage& image, double percentile)
{
    std::vector<double> sorted = image.data();
    const auto k = static_cast<std::size_t>(
        std::clamp(std::floor(percentile * static_cast<double>(sorted.size())), 0.0, static_cast<double>(sorted.size() - 1)));
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
    const double level = sorted[k];

    GrayImage out = image;
    if (level <= 0.0)
        return out;
    for (auto& v : out.data())
        v = v >= level ? 255.0 : v * 255.0 / level;
    return out;
}

HaarScorer::HaarScorer(const GrayImage& image)
    : width_(image.width()), height_(image.height()),
      prefix_(static_cast<std::size_t>(image.width() + 1) * image.height(), 0.0)
{
    const std::size_t stride = static_cast<std::size_t>(width_) + 1;
    for (int y = 0; y < height_; ++y) {
        double* row = &prefix_[static_cast<std::size_t>(y) * stride];
        for (int x = 0; x < width_; ++x)
            row[x + 1] = row[x] + image.at(x, y);
    }
}

std::vector<int> HaarScorer::half_widths(int r)
{
    std::vector<int> hw(static_cast<std::size_t>(r) + 1);
    const long long r2 = static_cast<long long>(r) * r;
    int w = r;
    for (int dy = 0; dy <= r; ++dy) {
        while (static_cast<long long>(w) * w + static_cast<long long>(dy) * dy > r2)
            --w;
        hw[static_cast<std::size_t>(dy)] = w;
    }
    return hw;
}

void HaarScorer::disc(const PixelIndex& c, const std::vector<int>& hw, double& sum, long long& count) const
{
    const std::size_t stride = static_cast<std::size_t>(width_) + 1;
    const int r = static_cast<int>(hw.size()) - 1;
    sum = 0.0;
    count = 0;
    for (int dy = 0; dy <= r; ++dy) {
        const int x0 = std::max(0, c.x - hw[static_cast<std::size_t>(dy)]);
        const int x1 = std::min(width_ - 1, c.x + hw[static_cast<std::size_t>(dy)]);
        if (x0 > x1)
            continue;
        for (int y : {c.y - dy, c.y + dy}) {
            if (y < 0 || y >= height_)
                continue;
            const double* row = &prefix_[static_cast<std::size_t>(y) * stride];
            sum += row[x1 + 1] - row[x0];
            count += x1 - x0 + 1;
            if (dy == 0)
                break;
        }
    }
}

void HaarScorer::score_all(const std::vector<int>& radii, std::vector<double>& best,
                           std::vector<int>& best_radius) const
{
    // Each radius needs discs r and 2r; radii sets usually share some of them.
    std::vector<int> discs;
    for (int r : radii) {
        discs.push_back(r);
        discs.push_back(2 * r);
    }
    std::sort(discs.begin(), discs.end());
    discs.erase(std::unique(discs.begin(), discs.end()), discs.end());
    std::vector<std::vector<int>> tables;
    for (int d : discs)
        tables.push_back(half_widths(d));
    const auto slot = [&](int d) {
        return static_cast<std::size_t>(std::lower_bound(discs.begin(), discs.end(), d) - discs.begin());
    };
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (int r : radii)
        pairs.emplace_back(slot(r), slot(2 * r));

    const std::size_t n = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    best.assign(n, -std::numeric_limits<double>::infinity());
    best_radius.assign(n, 0);
    const std::size_t stride = static_cast<std::size_t>(width_) + 1;
    std::vector<long long> full_counts;
    for (const auto& hw : tables) {
        long long c = 2 * hw[0] + 1;
        for (std::size_t dy = 1; dy < hw.size(); ++dy)
            c += 2 * (2 * hw[dy] + 1);
        full_counts.push_back(c);
    }
    std::vector<double> sums(discs.size());
    std::vector<long long> counts(discs.size());
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            for (std::size_t k = 0; k < discs.size(); ++k) {
                const auto& hw = tables[k];
                const int r = discs[k];
                if (x < r || y < r || x + r >= width_ || y + r >= height_) {
                    disc({x, y}, hw, sums[k], counts[k]);
                    continue;
                }
                // Unclipped: same summation order as disc(), fixed count.
                const double* row = &prefix_[static_cast<std::size_t>(y) * stride];
                double sum = row[x + hw[0] + 1] - row[x - hw[0]];
                for (std::size_t dy = 1; dy < hw.size(); ++dy) {
                    const double* up = row - dy * stride;
                    const double* down = row + dy * stride;
                    sum += up[x + hw[dy] + 1] - up[x - hw[dy]];
                    sum += down[x + hw[dy] + 1] - down[x - hw[dy]];
                }
                sums[k] = sum;
                counts[k] = full_counts[k];
            }
            const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
            for (std::size_t k = 0; k < radii.size(); ++k) {
                const auto [in, out] = pairs[k];
                const double outer_sum = sums[out] - sums[in];
                const long long outer_count = counts[out] - counts[in];
                if (counts[in] == 0 || outer_count == 0)
                    throw Error("haar window does not intersect the image");
                const double v = outer_sum / static_cast<double>(outer_count) - sums[in] / static_cast<double>(counts[in]);
                if (v > best[i]) {
                    best[i] = v;
                    best_radius[i] = radii[k];
                }
            }
        }
    }
}

HaarScorer::Sums HaarScorer::sums(const PixelIndex& center, int radius) const
{
    Sums s;
    disc(center, half_widths(radius), s.inner_sum, s.inner_count);
    double outer_sum = 0.0;
    long long outer_count = 0;
    disc(center, half_widths(2 * radius), outer_sum, outer_count);
    s.outer_sum = outer_sum - s.inner_sum;
    s.outer_count = outer_count - s.inner_count;
    return s;
}

double HaarScorer::response(const PixelIndex& center, int radius) const
{
    const Sums s = sums(center, radius);
    if (s.inner_count == 0 || s.outer_count == 0)
        throw Error("haar window does not intersect the image");
    return s.outer_sum / static_cast<double>(s.outer_count) - s.inner_sum / static_cast<double>(s.inner_count);
}

double haar_response(const GrayImage& image, const PixelPoint& center, int radius)
{
    if (radius < 2)
        throw Error("haar radius must be >= 2");
    const PixelIndex c = nearest_pixel(center);
    if (!image.contains(c.x, c.y))
        throw Error("haar window lies outside the image");
    return HaarScorer(image).response(c, radius);
}

namespace {

struct Component
{
    long long area = 0;
    double aspect = 1.0;
    double mean = 0.0;
    bool overflow = false;
};

// 4-connected region of `lit` <= threshold grown from `seed`. Growth stops
// once `limit` pixels are reached (the caller rejects such components anyway).
Component flood(const GrayImage& lit, const GrayImage& original, PixelIndex seed, double threshold, long long limit,
                std::vector<int>& visit_stamp, int stamp)
{
    Component c;
    const int w = lit.width();
    std::vector<PixelIndex> stack{seed};
    visit_stamp[lit.index(seed.x, seed.y)] = stamp;
    int x0 = seed.x, x1 = seed.x, y0 = seed.y, y1 = seed.y;
    double sum = 0.0;
    while (!stack.empty()) {
        const PixelIndex p = stack.back();
        stack.pop_back();
        ++c.area;
        sum += original.at(p.x, p.y);
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
        if (c.area > limit) {
            c.overflow = true;
            break;
        }
        const PixelIndex nb[4] = {{p.x - 1, p.y}, {p.x + 1, p.y}, {p.x, p.y - 1}, {p.x, p.y + 1}};
        for (const auto& q : nb) {
            if (!lit.contains(q.x, q.y))
                continue;
            const std::size_t i = static_cast<std::size_t>(q.y) * w + q.x;
            if (visit_stamp[i] == stamp || lit[i] > threshold)
                continue;
            visit_stamp[i] = stamp;
            stack.push_back(q);
        }
    }
    const double bw = x1 - x0 + 1;
    const double bh = y1 - y0 + 1;
    c.aspect = std::max(bw, bh) / std::min(bw, bh);
    c.mean = sum / static_cast<double>(c.area);
    return c;
}

} // namespace

std::vector<PupilCandidate> score_pupil_candidates(const GrayImage& image, const LocatorParams& params)
{
    if (params.candidates < 1)
        throw Error("candidate count must be >= 1");
    const GrayImage lit = adaptive_lighten(image, params.lighten_percentile);
    const HaarScorer scorer(lit);
    const std::vector<int> radii = params.scaled_radii(image.width());

    const int w = image.width();
    const int h = image.height();
    std::vector<double> best;
    std::vector<int> best_radius;
    scorer.score_all(radii, best, best_radius);

    // Top-k with suppression: a kept candidate claims the disc of its own radius.
    std::vector<std::size_t> order;
    order.reserve(best.size());
    for (std::size_t i = 0; i < best.size(); ++i)
        if (best[i] > 0.0)
            order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return best[a] != best[b] ? best[a] > best[b] : a < b;
    });

    std::vector<PupilCandidate> out;
    for (std::size_t i : order) {
        if (static_cast<int>(out.size()) >= params.candidates)
            break;
        const int x = static_cast<int>(i % static_cast<std::size_t>(w));
        const int y = static_cast<int>(i / static_cast<std::size_t>(w));
        bool suppressed = false;
        for (const auto& c : out) {
            const double dx = c.location.x - x, dy = c.location.y - y;
            if (dx * dx + dy * dy <= static_cast<double>(c.radius) * c.radius) {
                suppressed = true;
                break;
            }
        }
        if (suppressed)
            continue;
        PupilCandidate c;
        c.location = {static_cast<double>(x), static_cast<double>(y)};
        c.radius = best_radius[i];
        c.response = best[i];
        out.push_back(c);
    }

    const long long total = static_cast<long long>(w) * h;
    const long long max_area = static_cast<long long>(std::floor(params.max_area_fraction * total));
    const double min_area = params.min_area_fraction * static_cast<double>(total);
    std::vector<int> stamp(best.size(), -1);
    for (std::size_t n = 0; n < out.size(); ++n) {
        auto& c = out[n];
        const PixelIndex at = nearest_pixel(c.location);
        const HaarScorer::Sums s = scorer.sums(at, c.radius);
        const double inner = s.inner_sum / static_cast<double>(s.inner_count);
        const double threshold = inner + 0.5 * c.response;

        // Seed at the candidate, or at the darkest pixel of its inner disc.
        PixelIndex seed = at;
        if (lit.at(at.x, at.y) > threshold) {
            double darkest = std::numeric_limits<double>::infinity();
            for (int dy = -c.radius; dy <= c.radius; ++dy)
                for (int dx = -c.radius; dx <= c.radius; ++dx) {
                    const int px = at.x + dx, py = at.y + dy;
                    if (dx * dx + dy * dy > c.radius * c.radius || !lit.contains(px, py))
                        continue;
                    if (lit.at(px, py) < darkest) {
                        darkest = lit.at(px, py);
                        seed = {px, py};
                    }
                }
        }
        const Component comp = flood(lit, image, seed, threshold, max_area, stamp, static_cast<int>(n));
        c.component_area = comp.area;
        c.component_aspect = comp.aspect;
        c.mean_luminance = comp.mean;
        c.accepted = !comp.overflow && static_cast<double>(comp.area) >= min_area && comp.area <= max_area &&
                     comp.aspect <= params.max_aspect;
    }
    return out;
}

PixelPoint locate_pupil_point(const GrayImage& image, const LocatorParams& params)
{
    const auto candidates = score_pupil_candidates(image, params);
    const PupilCandidate* pick = nullptr;
    for (const auto& c : candidates) {
        if (!c.accepted)
            continue;
        if (!pick || c.mean_luminance < pick->mean_luminance ||
            (c.mean_luminance == pick->mean_luminance && c.response > pick->response))
            pick = &c;
    }
    if (!pick)
        throw NoPupilFound();
    return pick->location;
}

} // namespace eyeseg
