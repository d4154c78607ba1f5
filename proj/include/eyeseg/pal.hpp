#pragma once

#include "eyeseg/densify.hpp"
#include "eyeseg/ei.hpp"
#include "eyeseg/mask_set.hpp"
#include "eyeseg/oracle.hpp"
#include "eyeseg/pii.hpp"
#include "eyeseg/pupil_locator.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace eyeseg {

/// Rounds 0 .. rounds-1. Round 0 runs the pupil/iris indicator alone; from
/// `start` on, every `step`-th round refreshes everything including the eye indicator.
struct Schedule
{
    int rounds = 4;
    int start = 1; ///< E_start
    int step = 1;  ///< E_step

    /// start = ceil(rounds / 4), step = 1.
    static Schedule for_rounds(int rounds);

    void validate() const;
    bool refreshes(int round) const;
};

/// Mean pixel coordinate of the mask. Throws on an empty mask.
PixelPoint pupil_center(const Mask& mask);

/// (mean luminance over masks.pupil + mean over masks.iris) / 2.
double luminance_threshold(const GrayImage& image, const MaskSet& masks);

struct IgnoreSets
{
    Mask pupil; ///< pupil pixels brighter than th_c
    Mask iris;  ///< iris pixels darker than th_c
};

IgnoreSets prior_filter(const GrayImage& image, const MaskSet& masks, double th_c);

/// Pupil labels in `ignore.pupil` and Iris labels in `ignore.iris` become Ignore.
IndicationMap drop_ignored(IndicationMap map, const IgnoreSets& ignore);

struct PipelineParams
{
    PiiParams pii;
    EiParams ei;
    LocatorParams locator;
    Schedule schedule;
    std::uint64_t seed = 7;
};

struct PipelineInput
{
    std::string id;
    GrayImage image;
};

/// Lets a caller rewrite the pupil/iris ray labels of an image before they
/// are rasterised (fixtures with injected label errors).
using SegmentHook = std::function<void(std::size_t image, int round, const RayFan& fan,
                                       std::vector<RaySegmentLabel>& segments)>;

struct PipelineOptions
{
    bool prior_filter = true;
    bool oracle_refinement = true;
    SegmentHook segment_hook;
    /// Round-0 origins by image index; missing entries run the locator.
    std::vector<std::optional<PixelPoint>> origins;
    int jobs = 1;
};

struct ImageOutcome
{
    std::string id;
    bool failed = false;
    std::string error;
    MaskSet masks;
    MaskSet round0;
    PixelPoint origin;          ///< origin of the last indicator pass
    IndicationMap pupil_iris;   ///< last pupil/iris indication (after prior filtering)
    IndicationMap eye;          ///< last eye indication (refined when the oracle answered)
    std::size_t labeled_rays = 0;
    std::size_t retained_points = 0;
    std::string oracle_note;    ///< set when the oracle path fell back to initial indications
};

/// Per-image progressive loop; failures are recorded on the outcome.
ImageOutcome run_image(const PipelineInput& input, std::size_t index, const PipelineParams& params,
                       const SegmentationOracle* oracle, const PipelineOptions& options);

/// Results are in input order whatever the job count.
std::vector<ImageOutcome> run_progressive_pipeline(const std::vector<PipelineInput>& inputs,
                                                   const PipelineParams& params, const SegmentationOracle* oracle,
                                                   const PipelineOptions& options = {});

/// Eye mask from an initial indication alone: per-ray midpoints between the
/// last EyeFg and the next EyeBg sample, or the hull of EyeFg when those do not surround the origin.
Mask eye_from_initial(const IndicationMap& initial, const RayFan& fan);

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

} // namespace eyeseg
