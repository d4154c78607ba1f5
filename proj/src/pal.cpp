#include "eyeseg/pal.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace eyeseg {

Schedule Schedule::for_rounds(int rounds)
{
    return Schedule{rounds, std::max(1, (rounds + 3) / 4), 1};
}

void Schedule::validate() const
{
    if (rounds < 1)
        throw Error("schedule needs at least one round");
    if (start < 1 || start > rounds)
        throw Error("E_start must lie in [1, rounds]");
    if (step < 1)
        throw Error("E_step must be >= 1");
}

bool Schedule::refreshes(int round) const
{
    return round >= start && round < rounds && (round - start) % step == 0;
}

PixelPoint pupil_center(const Mask& mask)
{
    long long sx = 0, sy = 0, n = 0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.at(x, y)) {
                sx += x;
                sy += y;
                ++n;
            }
    if (n == 0)
        throw Error("no pupil prediction");
    return {static_cast<double>(sx) / static_cast<double>(n), static_cast<double>(sy) / static_cast<double>(n)};
}

namespace {

double mean_over(const GrayImage& image, const Mask& m, const char* what)
{
    require_same_shape(image, m, what);
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i]) {
            s += image[i];
            ++n;
        }
    if (n == 0)
        throw Error(std::string(what) + " mask is empty");
    return s / static_cast<double>(n);
}

} // namespace

double luminance_threshold(const GrayImage& image, const MaskSet& masks)
{
    const double cp = mean_over(image, masks.pupil, "pupil");
    const double ci = mean_over(image, masks.iris, "iris");
    return (cp + ci) / 2.0;
}

IgnoreSets prior_filter(const GrayImage& image, const MaskSet& masks, double th_c)
{
    require_same_shape(image, masks.pupil, "prior_filter");
    require_same_shape(image, masks.iris, "prior_filter");
    IgnoreSets out{Mask(image.width(), image.height(), 0), Mask(image.width(), image.height(), 0)};
    for (std::size_t i = 0; i < image.size(); ++i) {
        out.pupil[i] = masks.pupil[i] && image[i] > th_c;
        out.iris[i] = masks.iris[i] && image[i] < th_c;
    }
    return out;
}

IndicationMap drop_ignored(IndicationMap map, const IgnoreSets& ignore)
{
    require_same_shape(map, ignore.pupil, "drop_ignored");
    require_same_shape(map, ignore.iris, "drop_ignored");
    for (std::size_t i = 0; i < map.size(); ++i) {
        if ((map[i] == Label::Pupil && ignore.pupil[i]) || (map[i] == Label::Iris && ignore.iris[i]))
            map[i] = Label::Ignore;
    }
    return map;
}

Mask eye_from_initial(const IndicationMap& initial, const RayFan& fan)
{
    BoundaryPointSet pts = boundary_from_indication(initial, fan);
    try {
        return densify_eye(pts, fan);
    } catch (const InsufficientCoverage&) {
        return convex_hull_mask(label_mask(initial, Label::EyeFg));
    }
}

namespace {

struct PupilIrisPass
{
    PiiResult pii;
    PupilIrisFit fit;
};

PupilIrisPass pupil_iris_pass(const GrayImage& image, const PixelPoint& origin, std::size_t index, int round,
                              const PipelineParams& params, const PipelineOptions& options,
                              const MaskSet* previous)
{
    PiiResult pii = generate_pupil_iris_indications(image, origin, params.pii);
    if (options.segment_hook) {
        options.segment_hook(index, round, pii.fan, pii.segments);
        pii.map = rasterize_pupil_iris(pii.fan, pii.segments);
    }
    if (options.prior_filter && previous) {
        try {
            const double th_c = luminance_threshold(image, *previous);
            const MaskSet labels{label_mask(pii.map, Label::Pupil), label_mask(pii.map, Label::Iris),
                                 Mask(image.width(), image.height(), 0)};
            pii.map = drop_ignored(std::move(pii.map), prior_filter(image, labels, th_c));
        } catch (const Error&) {
            // an empty prediction leaves this round unfiltered
        }
    }
    PupilIrisFit fit = densify_pupil_iris(pii.map, pii.fan);
    return {std::move(pii), fit};
}

std::uint64_t prompt_seed(std::uint64_t seed, const std::string& id, int round)
{
    return seed ^ (stable_hash(id) + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(round));
}

} // namespace

ImageOutcome run_image(const PipelineInput& input, std::size_t index, const PipelineParams& params,
                       const SegmentationOracle* oracle, const PipelineOptions& options)
{
    ImageOutcome out;
    out.id = input.id;
    const GrayImage& image = input.image;
    const int w = image.width(), h = image.height();
    try {
        params.schedule.validate();
        params.pii.validate();
        params.ei.validate();

        PixelPoint origin;
        if (index < options.origins.size() && options.origins[index])
            origin = *options.origins[index];
        else
            origin = locate_pupil_point(image, params.locator);

        PupilIrisPass pass = pupil_iris_pass(image, origin, index, 0, params, options, nullptr);
        PupilIrisFit fit = pass.fit;
        Mask eye = mask_union(rasterize_ellipse(fit.pupil, w, h), rasterize_ellipse(fit.iris, w, h));
        out.masks = masks_from_ellipses(fit.pupil, fit.iris, eye);
        out.round0 = out.masks;
        out.origin = origin;
        out.pupil_iris = pass.pii.map;
        out.labeled_rays = pass.pii.labeled_rays();
        out.eye = IndicationMap(w, h, Label::Ignore);

        std::optional<SmoothnessMap> smooth;
        for (int round = 1; round < params.schedule.rounds; ++round) {
            if (!params.schedule.refreshes(round))
                continue;
            try {
                origin = pupil_center(out.masks.pupil);
            } catch (const Error&) {
                // keep the previous origin
            }
            try {
                pass = pupil_iris_pass(image, origin, index, round, params, options, &out.masks);
                fit = pass.fit;
            } catch (const FitFailed&) {
                // keep the previous ellipses
            }
            out.origin = origin;
            out.pupil_iris = pass.pii.map;
            out.labeled_rays = pass.pii.labeled_rays();
            const RayFan& fan = pass.pii.fan;

            if (!smooth)
                smooth = gstd_map(sobel_gradients(image), params.ei);
            const Mask p = rasterize_ellipse(fit.pupil, w, h);
            const Mask ir = rasterize_ellipse(fit.iris, w, h);
            const MaskSet region{p, mask_difference(ir, p), Mask(w, h, 0)};
            const IndicationMap initial = initial_eye_indication(*smooth, region, fan, params.ei.smooth_fraction);

            out.oracle_note.clear();
            std::optional<Mask> refined;
            if (options.oracle_refinement) {
                const PromptSet prompts = grid_prompts(initial, params.ei.grid, prompt_seed(params.seed, input.id, round));
                SegmentationRequest req{input.id, image, prompts.positives(), prompts.negatives()};
                if (req.positive.empty()) {
                    out.oracle_note = "no positive prompt";
                } else {
                    try {
                        const SegmentationResponse res = oracle->segment(req);
                        const BoundaryPointSet pts =
                            second_derivative_filter(extract_boundary(res.mask, fan), params.ei);
                        out.retained_points = pts.retained();
                        refined = densify_eye(pts, fan);
                        out.eye = refined_indication(pts, fan);
                    } catch (const InsufficientCoverage& e) {
                        out.oracle_note = e.what();
                    } catch (const Error& e) {
                        out.oracle_note = e.what();
                    }
                }
            }
            if (refined) {
                eye = std::move(*refined);
            } else {
                eye = eye_from_initial(initial, fan);
                out.eye = initial;
            }
            out.masks = masks_from_ellipses(fit.pupil, fit.iris, eye);
        }
    } catch (const Error& e) {
        out.failed = true;
        out.error = e.what();
        out.masks = MaskSet::empty(w, h);
    }
    return out;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn)
{
    const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    const std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);
}

std::vector<ImageOutcome> run_progressive_pipeline(const std::vector<PipelineInput>& inputs,
                                                   const PipelineParams& params, const SegmentationOracle* oracle,
                                                   const PipelineOptions& options)
{
    if (inputs.empty())
        throw Error("pipeline needs at least one image");
    params.schedule.validate();
    if (options.oracle_refinement && !oracle)
        throw Error("oracle refinement enabled without an oracle");
    std::vector<ImageOutcome> out(inputs.size());
    parallel_for(inputs.size(), options.jobs,
                 [&](std::size_t i) { out[i] = run_image(inputs[i], i, params, oracle, options); });
    return out;
}

} // namespace eyeseg
