#pragma once

#include "eyeseg/ei.hpp"
#include "eyeseg/indication.hpp"
#include "eyeseg/mask_set.hpp"
#include "eyeseg/ray_fan.hpp"

#include <span>
#include <vector>

namespace eyeseg {

class FitFailed : public Error
{
public:
    explicit FitFailed(const std::string& why) : Error("fit failed: " + why) {}
};

class InsufficientCoverage : public Error
{
public:
    InsufficientCoverage() : Error("retained boundary points do not surround the origin") {}
};

/// a >= b > 0, rotation of the a-axis in [0, pi).
struct EllipseParams
{
    PixelPoint center;
    double a = 0.0;
    double b = 0.0;
    double rotation = 0.0;

    bool contains(double x, double y) const;
    double area() const;
};

/// Direct least-squares conic fit constrained to ellipses (4AC - B^2 = 1),
/// solved in a centred and scaled frame.
EllipseParams fit_ellipse(std::span<const PixelPoint> points);

/// Repeats the fit without points lying further than max(2 px, 3 x median)
/// from the first estimate.
EllipseParams fit_ellipse_trimmed(std::span<const PixelPoint> points);

Mask rasterize_ellipse(const EllipseParams& e, int width, int height);

/// Per-ray radius r(theta_i) with presence flags.
struct PolarContour
{
    PixelPoint origin;
    std::vector<double> radius;
    std::vector<bool> present;
};

struct PupilIrisBoundary
{
    std::vector<PixelPoint> pupil;
    std::vector<PixelPoint> iris;
};

/// Boundary points read back from a pupil/iris indication map. A ray yields
/// a pupil point at (last Pupil sample + 1) when an Iris sample follows it,
/// and an iris point at (last Iris sample + 1) when a Background sample follows.
PupilIrisBoundary pupil_iris_boundary_points(const IndicationMap& indication, const RayFan& fan);

struct PupilIrisFit
{
    EllipseParams pupil;
    EllipseParams iris;
};

PupilIrisFit densify_pupil_iris(const IndicationMap& indication, const RayFan& fan);

/// Retained boundary radii, linearly interpolated across gaps on the circle.
PolarContour polar_contour(const BoundaryPointSet& retained, const RayFan& fan);

/// Star-shaped region under the interpolated contour. Needs >= 3 retained
/// points whose largest angular gap is below pi.
Mask densify_eye(const BoundaryPointSet& retained, const RayFan& fan);

/// Filled convex hull of the set pixels (empty in, empty out).
Mask convex_hull_mask(const Mask& m);

/// Rasterises and nests: pupil = P & I & E, iris = (I & E) \ pupil.
MaskSet masks_from_ellipses(const EllipseParams& pupil, const EllipseParams& iris, const Mask& eye);

} // namespace eyeseg
