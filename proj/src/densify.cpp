#include "eyeseg/densify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace eyeseg {

bool EllipseParams::contains(double x, double y) const
{
    const double c = std::cos(rotation), s = std::sin(rotation);
    const double dx = x - center.x, dy = y - center.y;
    const double u = (dx * c + dy * s) / a;
    const double v = (-dx * s + dy * c) / b;
    return u * u + v * v <= 1.0;
}

double EllipseParams::area() const
{
    return std::numbers::pi * a * b;
}

namespace {

// Conic A x^2 + B xy + C y^2 + D x + E y + F = 0 -> centre/axes/angle.
EllipseParams conic_to_ellipse(const Eigen::Matrix<double, 6, 1>& k)
{
    const double A = k[0], B = k[1], C = k[2], D = k[3], E = k[4], F = k[5];
    const double den = B * B - 4.0 * A * C;
    if (!(den < 0.0))
        throw FitFailed("conic is not an ellipse");
    const double x0 = (2.0 * C * D - B * E) / den;
    const double y0 = (2.0 * A * E - B * D) / den;
    const double f0 = A * x0 * x0 + B * x0 * y0 + C * y0 * y0 + D * x0 + E * y0 + F;

    Eigen::Matrix2d q;
    q << A, B / 2.0, B / 2.0, C;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(q);
    const Eigen::Vector2d lam = es.eigenvalues();
    const double s0 = -f0 / lam[0];
    const double s1 = -f0 / lam[1];
    if (!(s0 > 0.0 && s1 > 0.0) || !std::isfinite(s0) || !std::isfinite(s1))
        throw FitFailed("degenerate ellipse");
    // Larger semi-axis belongs to the eigenvalue of smaller magnitude.
    const int major = std::abs(lam[0]) <= std::abs(lam[1]) ? 0 : 1;
    const Eigen::Vector2d dir = es.eigenvectors().col(major);

    EllipseParams e;
    e.center = {x0, y0};
    e.a = std::sqrt(major == 0 ? s0 : s1);
    e.b = std::sqrt(major == 0 ? s1 : s0);
    double ang = std::atan2(dir.y(), dir.x());
    ang = std::fmod(ang, std::numbers::pi);
    if (ang < 0.0)
        ang += std::numbers::pi;
    if (ang >= std::numbers::pi)
        ang -= std::numbers::pi;
    e.rotation = ang;
    return e;
}

} // namespace

EllipseParams fit_ellipse(std::span<const PixelPoint> points)
{
    const auto n = static_cast<Eigen::Index>(points.size());
    if (n < 5)
        throw FitFailed("need at least 5 points, got " + std::to_string(n));

    double mx = 0.0, my = 0.0;
    for (const auto& p : points) {
        mx += p.x;
        my += p.y;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double spread = 0.0;
    for (const auto& p : points)
        spread += (p.x - mx) * (p.x - mx) + (p.y - my) * (p.y - my);
    const double scale = std::sqrt(spread / (2.0 * static_cast<double>(n)));
    if (!(scale > 0.0))
        throw FitFailed("points coincide");

    Eigen::MatrixXd d1(n, 3), d2(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = (points[static_cast<std::size_t>(i)].x - mx) / scale;
        const double y = (points[static_cast<std::size_t>(i)].y - my) / scale;
        d1.row(i) << x * x, x * y, y * y;
        d2.row(i) << x, y, 1.0;
    }
    const Eigen::Matrix3d s1 = d1.transpose() * d1;
    const Eigen::Matrix3d s2 = d1.transpose() * d2;
    const Eigen::Matrix3d s3 = d2.transpose() * d2;

    Eigen::FullPivLU<Eigen::Matrix3d> lu(s3);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible())
        throw FitFailed("points are collinear");
    const Eigen::Matrix3d t = -lu.solve(s2.transpose());
    const Eigen::Matrix3d m = s1 + s2 * t;

    // Premultiply by the inverse of the ellipse constraint matrix.
    Eigen::Matrix3d c;
    c.row(0) = m.row(2) / 2.0;
    c.row(1) = -m.row(1);
    c.row(2) = m.row(0) / 2.0;

    const Eigen::EigenSolver<Eigen::Matrix3d> es(c);
    int pick = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        const Eigen::Vector3d v = es.eigenvectors().col(i).real();
        const double cond = 4.0 * v[0] * v[2] - v[1] * v[1];
        const double lam = std::abs(es.eigenvalues()[i].real());
        if (cond > 0.0 && lam < best) {
            best = lam;
            pick = i;
        }
    }
    if (pick < 0)
        throw FitFailed("no elliptical solution");
    const Eigen::Vector3d a1 = es.eigenvectors().col(pick).real();
    const Eigen::Vector3d a2 = t * a1;
    Eigen::Matrix<double, 6, 1> k;
    k << a1, a2;

    EllipseParams e = conic_to_ellipse(k);
    e.center = {e.center.x * scale + mx, e.center.y * scale + my};
    e.a *= scale;
    e.b *= scale;
    return e;
}

namespace {

double radial_residual(const EllipseParams& e, const PixelPoint& p)
{
    const double c = std::cos(e.rotation), s = std::sin(e.rotation);
    const double dx = p.x - e.center.x, dy = p.y - e.center.y;
    const double u = (dx * c + dy * s) / e.a;
    const double v = (-dx * s + dy * c) / e.b;
    const double k = std::sqrt(u * u + v * v);
    if (k == 0.0)
        return e.b;
    return std::hypot(dx, dy) * std::abs(1.0 - 1.0 / k);
}

} // namespace

EllipseParams fit_ellipse_trimmed(std::span<const PixelPoint> points)
{
    const EllipseParams first = fit_ellipse(points);
    std::vector<double> res;
    res.reserve(points.size());
    for (const auto& p : points)
        res.push_back(radial_residual(first, p));
    std::vector<double> sorted = res;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double cut = std::max(2.0, 3.0 * sorted[sorted.size() / 2]);
    std::vector<PixelPoint> kept;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (res[i] <= cut)
            kept.push_back(points[i]);
    if (kept.size() == points.size() || kept.size() < 5)
        return first;
    return fit_ellipse(kept);
}

Mask rasterize_ellipse(const EllipseParams& e, int width, int height)
{
    Mask m(width, height, 0);
    const int x0 = std::max(0, static_cast<int>(std::floor(e.center.x - e.a)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(e.center.x + e.a)));
    const int y0 = std::max(0, static_cast<int>(std::floor(e.center.y - e.a)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(e.center.y + e.a)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (e.contains(x, y))
                m.at(x, y) = 1;
    return m;
}

PupilIrisBoundary pupil_iris_boundary_points(const IndicationMap& indication, const RayFan& fan)
{
    PupilIrisBoundary out;
    for (int i = 0; i < fan.ray_count(); ++i) {
        const auto s = fan.samples(i);
        int pupil_last = -1, first_iris = -1, iris_last = -1, first_bg = -1;
        for (int t = 0; t < static_cast<int>(s.size()); ++t) {
            const Label l = indication.at(s[t].x, s[t].y);
            if (l == Label::Pupil && first_iris < 0) {
                pupil_last = t;
            } else if (l == Label::Iris) {
                if (first_iris < 0)
                    first_iris = t;
                iris_last = t;
            } else if (l == Label::Background && iris_last >= 0) {
                first_bg = t;
                break;
            }
        }
        if (pupil_last >= 0 && first_iris > pupil_last)
            out.pupil.push_back(fan.point_at(i, pupil_last + 1.0));
        if (iris_last >= 0 && first_bg > iris_last)
            out.iris.push_back(fan.point_at(i, iris_last + 1.0));
    }
    return out;
}

PupilIrisFit densify_pupil_iris(const IndicationMap& indication, const RayFan& fan)
{
    const PupilIrisBoundary pts = pupil_iris_boundary_points(indication, fan);
    return PupilIrisFit{fit_ellipse_trimmed(pts.pupil), fit_ellipse_trimmed(pts.iris)};
}

PolarContour polar_contour(const BoundaryPointSet& retained, const RayFan& fan)
{
    const int n = fan.ray_count();
    if (static_cast<int>(retained.points.size()) != n)
        throw Error("boundary set does not match the ray fan");
    PolarContour c;
    c.origin = fan.origin();
    c.radius.assign(static_cast<std::size_t>(n), 0.0);
    c.present.assign(static_cast<std::size_t>(n), false);

    std::vector<int> idx;
    for (int i = 0; i < n; ++i) {
        const auto& p = retained.points[static_cast<std::size_t>(i)];
        if (p && p->retained) {
            idx.push_back(i);
            c.present[static_cast<std::size_t>(i)] = true;
            c.radius[static_cast<std::size_t>(i)] = p->distance + 0.5;
        }
    }
    if (idx.size() < 3)
        throw InsufficientCoverage();
    int max_gap = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const int a = idx[k];
        const int b = k + 1 < idx.size() ? idx[k + 1] : idx[0] + n;
        max_gap = std::max(max_gap, b - a);
    }
    // The gap is measured in rays; it must stay below half a turn.
    if (2 * max_gap >= n)
        throw InsufficientCoverage();

    for (std::size_t k = 0; k < idx.size(); ++k) {
        const int a = idx[k];
        const int b = k + 1 < idx.size() ? idx[k + 1] : idx[0] + n;
        const double ra = c.radius[static_cast<std::size_t>(a)];
        const double rb = c.radius[static_cast<std::size_t>(b % n)];
        for (int j = a + 1; j < b; ++j) {
            const double w = static_cast<double>(j - a) / (b - a);
            c.radius[static_cast<std::size_t>(j % n)] = (1.0 - w) * ra + w * rb;
        }
    }
    return c;
}

Mask densify_eye(const BoundaryPointSet& retained, const RayFan& fan)
{
    const PolarContour c = polar_contour(retained, fan);
    const int n = fan.ray_count();
    const double rmax = *std::max_element(c.radius.begin(), c.radius.end());
    Mask m(fan.width(), fan.height(), 0);
    const int x0 = std::max(0, static_cast<int>(std::floor(c.origin.x - rmax)));
    const int x1 = std::min(fan.width() - 1, static_cast<int>(std::ceil(c.origin.x + rmax)));
    const int y0 = std::max(0, static_cast<int>(std::floor(c.origin.y - rmax)));
    const int y1 = std::min(fan.height() - 1, static_cast<int>(std::ceil(c.origin.y + rmax)));
    const double per_ray = n / (2.0 * std::numbers::pi);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - c.origin.x, dy = y - c.origin.y;
            const double rho = std::hypot(dx, dy);
            double theta = std::atan2(dy, dx);
            if (theta < 0.0)
                theta += 2.0 * std::numbers::pi;
            const double f = theta * per_ray;
            const int i0 = static_cast<int>(std::floor(f)) % n;
            const int i1 = (i0 + 1) % n;
            const double w = f - std::floor(f);
            const double r = (1.0 - w) * c.radius[static_cast<std::size_t>(i0)] + w * c.radius[static_cast<std::size_t>(i1)];
            if (rho <= r)
                m.at(x, y) = 1;
        }
    }
    return m;
}

Mask convex_hull_mask(const Mask& m)
{
    struct P
    {
        long long x, y;
    };
    std::vector<P> pts;
    for (int y = 0; y < m.height(); ++y) {
        int lo = -1, hi = -1;
        for (int x = 0; x < m.width(); ++x) {
            if (m.at(x, y)) {
                if (lo < 0)
                    lo = x;
                hi = x;
            }
        }
        if (lo >= 0) {
            pts.push_back({lo, y});
            if (hi != lo)
                pts.push_back({hi, y});
        }
    }
    if (pts.size() < 3)
        return m;
    std::sort(pts.begin(), pts.end(), [](const P& a, const P& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
    const auto cross = [](const P& o, const P& a, const P& b) {
        return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    };
    std::vector<P> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0)
            --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0)
            --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    if (hull.size() < 3)
        return m;

    Mask out = m;
    long long bx0 = hull[0].x, bx1 = hull[0].x, by0 = hull[0].y, by1 = hull[0].y;
    for (const auto& h : hull) {
        bx0 = std::min(bx0, h.x);
        bx1 = std::max(bx1, h.x);
        by0 = std::min(by0, h.y);
        by1 = std::max(by1, h.y);
    }
    for (long long y = by0; y <= by1; ++y) {
        for (long long x = bx0; x <= bx1; ++x) {
            bool inside = true;
            for (std::size_t i = 0; i < hull.size() && inside; ++i)
                inside = cross(hull[i], hull[(i + 1) % hull.size()], P{x, y}) >= 0;
            if (inside)
                out.at(static_cast<int>(x), static_cast<int>(y)) = 1;
        }
    }
    return out;
}

MaskSet masks_from_ellipses(const EllipseParams& pupil, const EllipseParams& iris, const Mask& eye)
{
    const Mask p = rasterize_ellipse(pupil, eye.width(), eye.height());
    const Mask i = rasterize_ellipse(iris, eye.width(), eye.height());
    MaskSet out;
    out.pupil = mask_intersection(mask_intersection(p, i), eye);
    out.iris = mask_difference(mask_intersection(i, eye), out.pupil);
    out.eye = eye;
    return out;
}

} // namespace eyeseg
