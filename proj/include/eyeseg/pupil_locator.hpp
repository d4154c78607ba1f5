#pragma once

#include "eyeseg/raster.hpp"

#include <vector>

namespace eyeseg {

/// Raised when no candidate survives the component filters.
class NoPupilFound : public Error
{
public:
    NoPupilFound() : Error("no pupil found") {}
};

struct LocatorParams
{
    std::vector<int> radii = {4, 6, 8, 12, 16, 24}; ///< at a reference width of 640 px
    int candidates = 10;                             ///< top-k
    double min_area_fraction = 0.0005;
    double max_area_fraction = 0.20;
    double max_aspect = 3.0;
    double lighten_percentile = 0.30;

    /// Radii rescaled by width / 640, never below 2.
    std::vector<int> scaled_radii(int image_width) const;
};

struct PupilCandidate
{
    PixelPoint location;
    int radius = 0;
    double response = 0.0;
    long long component_area = 0;
    double component_aspect = 1.0;
    double mean_luminance = 0.0;
    bool accepted = false;
};

/// Pixels at or above the given percentile saturate to 255; darker ones are
/// scaled linearly by 255 / percentile-value. A zero percentile value leaves the image unchanged.
GrayImage adaptive_lighten(const GrayImage& image, double percentile = 0.30);

/// Centre-surround contrast from row-wise prefix sums: mean of the ring
/// (r, 2r] minus mean of the disc of radius r, both clipped to the image.
class HaarScorer
{
public:
    explicit HaarScorer(const GrayImage& image);

    double response(const PixelIndex& center, int radius) const;

    struct Sums
    {
        double inner_sum = 0.0;
        long long inner_count = 0;
        double outer_sum = 0.0;
        long long outer_count = 0;
    };
    Sums sums(const PixelIndex& center, int radius) const;

    /// Best response over `radii` at every pixel, row-major; the first radius wins ties.
    /// Bit-identical to calling response() per pixel and radius.
    void score_all(const std::vector<int>& radii, std::vector<double>& best, std::vector<int>& best_radius) const;

private:
    /// Half-width of each row of the disc of radius r, dy = 0..r.
    static std::vector<int> half_widths(int r);

    /// Sum and count over the clipped disc with the given row half-widths around `c`.
    void disc(const PixelIndex& c, const std::vector<int>& hw, double& sum, long long& count) const;

    int width_;
    int height_;
    std::vector<double> prefix_; // (width+1) per row
};

/// Single evaluation; throws when the centre is outside the image or radius < 2.
double haar_response(const GrayImage& image, const PixelPoint& center, int radius);

/// Every scored candidate with its filter verdict, strongest response first.
std::vector<PupilCandidate> score_pupil_candidates(const GrayImage& image, const LocatorParams& params = {});

/// Darkest surviving candidate; ties go to the larger response.
PixelPoint locate_pupil_point(const GrayImage& image, const LocatorParams& params = {});

} // namespace eyeseg
