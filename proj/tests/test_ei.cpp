#include "support.hpp"

#include "eyeseg/ei.hpp"

#include <doctest.h>

#include <random>

using namespace eyeseg;

namespace {

BoundaryPointSet from_lengths(const std::vector<double>& L)
{
    BoundaryPointSet s;
    for (std::size_t i = 0; i < L.size(); ++i)
        s.points.push_back(BoundaryPoint{static_cast<int>(i), {0, 0}, L[i], true});
    return s;
}

} // namespace

TEST_SUITE("ei")
{
    TEST_CASE("gstd of a constant-magnitude field is zero")
    {
        const auto m = gstd_map(GradientField(20, 10, Vec2{3.0, 4.0}), EiParams{});
        for (std::size_t i = 0; i < m.gstd.size(); ++i) {
            CHECK(m.gstd[i] == 0.0);
            CHECK(m.smooth[i] == 1);
        }
    }

    TEST_CASE("gstd window examples")
    {
        EiParams p;
        p.window_side = 3;
        GradientField spike(3, 3);
        spike.at(1, 1) = {10.0, 0.0};
        const auto a = gstd_map(spike, p);
        CHECK(a.gstd.at(1, 1) == doctest::Approx(std::sqrt(800.0 / 81.0)));
        CHECK(a.gstd.at(1, 1) == doctest::Approx(3.1427).epsilon(1e-4));
        CHECK(a.smooth.at(1, 1) == 1);

        GradientField alt(8, 8);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                alt.at(x, y) = {0.0, x % 2 ? 20.0 : 0.0};
        p.window_side = 2;
        const auto b = gstd_map(alt, p);
        CHECK(b.gstd.at(4, 4) == doctest::Approx(10.0));
        CHECK(b.smooth.at(4, 4) == 0);
    }

    TEST_CASE("smooth flag equals gstd below threshold")
    {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> u(0.0, 12.0);
        GradientField f(30, 20);
        for (auto& v : f.data())
            v = {u(rng), 0.0};
        const EiParams p;
        const auto m = gstd_map(f, p);
        for (std::size_t i = 0; i < m.gstd.size(); ++i)
            CHECK((m.smooth[i] != 0) == (m.gstd[i] < p.gstd_threshold));
    }

    TEST_CASE("initial eye indication along one ray")
    {
        // A single horizontal ray: origin at x = 0, region covers x < 20.
        const int w = 120, h = 1;
        MaskSet region = MaskSet::empty(w, h);
        for (int x = 0; x < 20; ++x)
            region.pupil.at(x, 0) = 1;
        SmoothnessMap sm{Raster<double>(w, h, 0.0), Mask(w, h, 1)};
        const RayFan fan({0, 0}, 8, w, h);
        const IndicationMap m = initial_eye_indication(sm, region, fan);
        for (int x = 0; x < 20; ++x)
            CHECK(m.at(x, 0) == Label::EyeFg);
        // 100 smooth samples past the region: 30 EyeFg, 40 Ignore, 30 EyeBg.
        for (int x = 20; x < 50; ++x)
            CHECK(m.at(x, 0) == Label::EyeFg);
        for (int x = 50; x < 90; ++x)
            CHECK(m.at(x, 0) == Label::Ignore);
        for (int x = 90; x < 120; ++x)
            CHECK(m.at(x, 0) == Label::EyeBg);

        // No smooth samples: everything past the region stays Ignore, the region stays EyeFg.
        SmoothnessMap rough{Raster<double>(w, h, 9.0), Mask(w, h, 0)};
        const IndicationMap r = initial_eye_indication(rough, region, fan);
        CHECK(count_label(r, Label::EyeFg) == 20);
        CHECK(count_label(r, Label::EyeBg) == 0);

        CHECK_THROWS_AS(initial_eye_indication(sm, MaskSet::empty(w, h), fan), Error);
    }

    TEST_CASE("grid prompts")
    {
        IndicationMap m(100, 100, Label::Ignore);
        // Cell 0 fully EyeFg, cell 1 60/40, cell 2 a 50/50 tie, everything else Ignore.
        for (int y = 0; y < 10; ++y)
            for (int x = 0; x < 10; ++x) {
                m.at(x, y) = Label::EyeFg;
                m.at(10 + x, y) = y < 6 ? Label::EyeFg : Label::EyeBg;
                m.at(20 + x, y) = y < 5 ? Label::EyeFg : Label::Background;
            }
        const PromptSet a = grid_prompts(m, 10, 99);
        REQUIRE(a.prompts.size() == 3);
        CHECK(a.prompts[0].cell == 0);
        CHECK(a.prompts[0].positive);
        CHECK(a.prompts[1].cell == 1);
        CHECK(a.prompts[1].positive);
        CHECK(m.at(a.prompts[1].at.x, a.prompts[1].at.y) == Label::EyeFg);
        CHECK(a.prompts[2].cell == 2);
        CHECK_FALSE(a.prompts[2].positive);
        CHECK(m.at(a.prompts[2].at.x, a.prompts[2].at.y) == Label::Background);

        const PromptSet b = grid_prompts(m, 10, 99);
        for (std::size_t i = 0; i < a.prompts.size(); ++i)
            CHECK(a.prompts[i].at == b.prompts[i].at);
        CHECK(a.positives().size() == 2);
        CHECK(a.negatives().size() == 1);
        CHECK(grid_prompts(IndicationMap(50, 50, Label::Ignore), 10, 1).prompts.empty());
        CHECK_THROWS_AS(grid_prompts(m, 0, 1), Error);
    }

    TEST_CASE("grid cells absorb the remainder")
    {
        CHECK(grid_cell(0, 0, 105, 103, 10) == 0);
        CHECK(grid_cell(104, 0, 105, 103, 10) == 9);
        CHECK(grid_cell(104, 102, 105, 103, 10) == 99);
        CHECK(grid_cell(3, 3, 5, 5, 10) == 33);
    }

    TEST_CASE("boundary of a disc")
    {
        const Mask disc = testing::disc_mask(200, 200, 100, 100, 50);
        const RayFan fan({100, 100}, 360, 200, 200);
        const BoundaryPointSet b = extract_boundary(disc, fan);
        CHECK(b.present() == 360);
        // Last inside sample, rounded to a pixel: within one step plus half a diagonal.
        for (const auto& p : b.points)
            CHECK((p->distance >= 48.0 && p->distance <= 50.0));
        CHECK(extract_boundary(Mask(200, 200, 0), fan).present() == 0);
        CHECK_THROWS_AS(extract_boundary(Mask(20, 20, 0), fan), Error);
    }

    TEST_CASE("boundary keeps the nearest exit")
    {
        Mask m = testing::disc_mask(200, 200, 100, 100, 60);
        const Mask gap = mask_difference(testing::disc_mask(200, 200, 100, 100, 35),
                                         testing::disc_mask(200, 200, 100, 100, 30));
        m = mask_difference(m, gap);
        const RayFan fan({100, 100}, 90, 200, 200);
        const BoundaryPointSet b = extract_boundary(m, fan);
        for (const auto& p : b.points) {
            REQUIRE(p);
            CHECK(p->distance <= 30.5);
            CHECK(p->distance >= 28.5);
        }
    }

    TEST_CASE("second differences and the deletion rule")
    {
        EiParams p;
        const auto flat = second_derivative_filter(from_lengths(std::vector<double>(100, 40.0)), p);
        CHECK(flat.retained() == 100);

        std::vector<double> L(100, 10.0);
        L[50] = 50.0;
        const auto d2 = second_differences(from_lengths(L));
        CHECK(*d2[50] == -80.0);
        CHECK(*d2[49] == 40.0);
        const auto spiked = second_derivative_filter(from_lengths(L), p);
        // Second differences at 49..51 exceed th_d; each removes +-15 neighbours.
        for (int i = 0; i < 100; ++i)
            CHECK(spiked.points[static_cast<std::size_t>(i)]->retained == (i < 34 || i > 66));

        // A missing point leaves its neighbours without a defined second difference.
        BoundaryPointSet holes = from_lengths(std::vector<double>(100, 40.0));
        holes.points[0].reset();
        const auto h = second_derivative_filter(holes, p);
        CHECK(h.retained() == 100 - 1 - 2 * 16);
    }

    TEST_CASE("smooth ellipse contour is mostly retained")
    {
        const int w = 400, h = 300;
        Mask e(w, h, 0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double u = (x - 200.0) / 150.0, v = (y - 150.0) / 90.0;
                e.at(x, y) = u * u + v * v <= 1.0;
            }
        const RayFan fan({200, 150}, 360, w, h);
        const auto pts = second_derivative_filter(extract_boundary(e, fan), EiParams{});
        CHECK(pts.retained() >= 324);
    }

    TEST_CASE("refined indication")
    {
        const Mask disc = testing::disc_mask(200, 200, 100, 100, 50);
        const RayFan fan({100, 100}, 360, 200, 200);
        BoundaryPointSet b = extract_boundary(disc, fan);
        const IndicationMap m = refined_indication(b, fan);
        for (int i = 0; i < 360; i += 7) {
            const auto s = fan.samples(i);
            int last_fg = -1, first_bg = 1 << 30;
            for (int t = 0; t < static_cast<int>(s.size()); ++t) {
                const Label l = m.at(s[t].x, s[t].y);
                if (l == Label::EyeFg)
                    last_fg = t;
                if (l == Label::EyeBg)
                    first_bg = std::min(first_bg, t);
            }
            CHECK(last_fg < first_bg);
            CHECK(std::abs(last_fg - 50) <= 1);
        }
        for (std::size_t i = 0; i < b.points.size(); i += 2)
            b.points[i]->retained = false;
        const IndicationMap half = refined_indication(b, fan);
        const auto far0 = fan.samples(0).back(), far1 = fan.samples(1).back();
        CHECK(half.at(far0.x, far0.y) == Label::Ignore);
        CHECK(half.at(far1.x, far1.y) == Label::EyeBg);
        BoundaryPointSet none;
        none.points.resize(360);
        CHECK(count_label(refined_indication(none, fan), Label::Ignore) == 200u * 200u);
    }

    TEST_CASE("defaults")
    {
        const EiParams p;
        CHECK(p.window_side == 5);
        CHECK(p.gstd_threshold == 5.0);
        CHECK(p.derivative_threshold == 20.0);
        CHECK(p.neighborhood == 30);
        CHECK(p.grid == 10);
        CHECK(p.smooth_fraction == 0.30);
    }
}
