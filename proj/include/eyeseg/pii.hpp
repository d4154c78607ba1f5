#pragma once

#include "eyeseg/gradient.hpp"
#include "eyeseg/indication.hpp"
#include "eyeseg/ray_fan.hpp"

#include <span>
#include <utility>
#include <vector>

namespace eyeseg {

/// Pupil-iris indicator settings.
struct PiiParams
{
    int window_side = 10;    ///< side of the agreement window k
    double agreement = 0.8;  ///< r_th: fraction of the window that must point outward
    int pulse_width = 3;     ///< tau
    int ray_count = 360;     ///< N

    void validate() const;
};

enum class RayStatus
{
    Labeled,
    Ignored,
};

/// Per-ray split into pupil [0, a), iris [a, b) and background (b, T).
/// Sample b itself is left unlabelled.
struct RaySegmentLabel
{
    int ray = 0;
    int pupil_end = 0; ///< a
    int iris_end = 0;  ///< b
    int length = 0;    ///< T
    RayStatus status = RayStatus::Ignored;

    bool labeled() const { return status == RayStatus::Labeled; }
    int iris_length() const { return iris_end - pupil_end; }
};

/// 1 where the gradient is non-zero and has a positive component along
/// (pixel - origin). The origin's own pixel never qualifies.
Raster<std::uint8_t> outward_gradient_flags(const GradientField& field, const PixelPoint& origin);

/// Keeps a gradient only where more than `agreement` of its window points outward.
GradientField filter_radial_gradients(const GradientField& field, const PixelPoint& origin, const PiiParams& params);

/// Inclusive tap offsets of the discrete rectangular pulse of width tau:
/// odd tau -> [-(tau-1)/2, (tau-1)/2], even tau -> [-tau/2+1, tau/2].
std::pair<int, int> pulse_support(int tau);

/// r*(t) = sum_m r(t - m) R_tau(m); samples outside [0, T) count as zero.
std::vector<double> convolve_ray_pulse(std::span<const double> magnitudes, int tau);

/// Magnitude floor separating "zero" from "non-zero" convolved samples.
inline constexpr double kRunFloor = 1e-6;

/// First two runs of non-zero samples give the pupil (a) and iris (b)
/// boundaries at their midpoints. Fewer than two runs -> ignored.
RaySegmentLabel extract_ray_segments(std::span<const double> convolved, int ray = 0);

/// Drops rays whose iris length deviates from the mean by more than one
/// population standard deviation (statistics over the labelled rays).
std::vector<RaySegmentLabel> statistical_ray_filter(std::vector<RaySegmentLabel> segments);

/// Writes the labelled rays onto a map; everything else stays Ignore.
IndicationMap rasterize_pupil_iris(const RayFan& fan, std::span<const RaySegmentLabel> segments);

struct PiiResult
{
    IndicationMap map;
    RayFan fan;
    std::vector<RaySegmentLabel> segments; ///< after statistical filtering

    std::size_t labeled_rays() const;
};

/// Gradients -> outward filter -> ray fan -> pulse convolution -> runs ->
/// statistical filter -> map.
PiiResult generate_pupil_iris_indications(const GrayImage& image, const PixelPoint& origin, const PiiParams& params);

} // namespace eyeseg
