#pragma once

#include "eyeseg/gradient.hpp"
#include "eyeseg/indication.hpp"
#include "eyeseg/mask_set.hpp"
#include "eyeseg/ray_fan.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace eyeseg {

/// Eye indicator settings.
struct EiParams
{
    int window_side = 5;                ///< k*
    double gstd_threshold = 5.0;        ///< th_std
    double smooth_fraction = 0.30;
    int grid = 10;                      ///< n
    int neighborhood = 30;              ///< epsilon, counted in boundary points
    double derivative_threshold = 20.0; ///< th_d

    void validate() const;
};

struct SmoothnessMap
{
    Raster<double> gstd;
    Mask smooth; ///< 1 iff gstd < threshold
};

/// Population std of gradient magnitudes over the clipped k* window.
SmoothnessMap gstd_map(const GradientField& field, const EiParams& params);

/// Pupil and iris pixels become EyeFg. Past the iris exit on each ray, the
/// first smooth_fraction of the smooth samples become EyeFg and the last
/// smooth_fraction EyeBg; everything else is Ignore.
IndicationMap initial_eye_indication(const SmoothnessMap& smooth, const MaskSet& pupil_iris, const RayFan& fan,
                                     double smooth_fraction = 0.30);

struct Prompt
{
    PixelIndex at;
    bool positive = false;
    int cell = 0; ///< row-major cell index
};

struct PromptSet
{
    int grid = 0;
    std::vector<Prompt> prompts;

    std::vector<PixelIndex> positives() const;
    std::vector<PixelIndex> negatives() const;
};

/// Cell of pixel (x, y) in an n x n partition; edge cells absorb remainders.
int grid_cell(int x, int y, int width, int height, int n);

/// One prompt per cell holding any EyeFg / EyeBg / Background pixel.
/// Majority polarity wins, ties go negative; the pixel is drawn uniformly
/// with a generator seeded by `seed`, visiting cells in row-major order.
PromptSet grid_prompts(const IndicationMap& indication, int n, std::uint64_t seed);

struct BoundaryPoint
{
    int sample = 0;  ///< index along the ray
    PixelIndex pixel;
    double distance = 0.0; ///< L(p): from the fan origin to the pixel
    bool retained = true;
};

/// One optional point per ray of the fan.
struct BoundaryPointSet
{
    std::vector<std::optional<BoundaryPoint>> points;

    std::size_t present() const;
    std::size_t retained() const;
};

/// Last positive sample before the ray first leaves the positive region.
/// Absent when the ray starts outside the region or never leaves it.
BoundaryPointSet extract_boundary(const Mask& oracle_mask, const RayFan& fan);

/// Circular second differences of L; nullopt where a point or a neighbour is missing.
std::vector<std::optional<double>> second_differences(const BoundaryPointSet& points);

/// Drops every point that has, within +-neighborhood/2 points, a second
/// difference above the threshold in absolute value (or an undefined one).
BoundaryPointSet second_derivative_filter(BoundaryPointSet points, const EiParams& params);

/// Retained rays: samples up to the boundary EyeFg, beyond it EyeBg.
IndicationMap refined_indication(const BoundaryPointSet& retained, const RayFan& fan);

/// Per-ray eye boundary read from an indication map: halfway between the last
/// EyeFg sample and the first EyeBg sample after it.
BoundaryPointSet boundary_from_indication(const IndicationMap& indication, const RayFan& fan);

} // namespace eyeseg
