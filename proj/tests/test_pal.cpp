#include "support.hpp"

#include "eyeseg/pal.hpp"

#include <doctest.h>

#include <random>

using namespace eyeseg;

namespace {

/// Pupil disc of radius 20 at level 10 inside an iris disc of radius 50 at level 50.
struct TwoDiscs
{
    GrayImage image = GrayImage(120, 120, 150.0);
    MaskSet masks = MaskSet::empty(120, 120);

    TwoDiscs()
    {
        const Mask p = testing::disc_mask(120, 120, 60, 60, 20);
        const Mask i = testing::disc_mask(120, 120, 60, 60, 50);
        for (std::size_t k = 0; k < image.size(); ++k)
            image[k] = p[k] ? 10.0 : i[k] ? 50.0 : 150.0;
        masks = {p, mask_difference(i, p), i};
    }
};

std::vector<PipelineInput> inputs_of(const std::vector<bench::CorpusEntry>& corpus)
{
    std::vector<PipelineInput> out;
    for (const auto& e : corpus)
        out.push_back({e.id, e.image});
    return out;
}

} // namespace

TEST_SUITE("pal")
{
    TEST_CASE("schedule")
    {
        const Schedule s;
        CHECK(s.rounds == 4);
        CHECK(s.start == 1);
        CHECK(s.step == 1);
        CHECK(Schedule::for_rounds(8).start == 2);
        CHECK(Schedule::for_rounds(5).start == 2);
        CHECK(Schedule::for_rounds(1).start == 1);
        CHECK_FALSE(s.refreshes(0));
        CHECK(s.refreshes(1));
        CHECK(s.refreshes(3));
        const Schedule sparse{10, 3, 4};
        CHECK_FALSE(sparse.refreshes(2));
        CHECK(sparse.refreshes(3));
        CHECK_FALSE(sparse.refreshes(5));
        CHECK(sparse.refreshes(7));
        CHECK_THROWS_AS((Schedule{4, 0, 1}.validate()), Error);
        CHECK_THROWS_AS((Schedule{4, 5, 1}.validate()), Error);
        CHECK_THROWS_AS((Schedule{4, 1, 0}.validate()), Error);
    }

    TEST_CASE("pupil centre")
    {
        Mask one(10, 10, 0);
        one.at(7, 3) = 1;
        CHECK(pupil_center(one) == PixelPoint{7, 3});
        Mask four(5, 5, 0);
        four.at(0, 0) = four.at(2, 0) = four.at(0, 2) = four.at(2, 2) = 1;
        CHECK(pupil_center(four) == PixelPoint{1, 1});
        const PixelPoint c = pupil_center(testing::disc_mask(100, 100, 50, 50, 17));
        CHECK(std::abs(c.x - 50) <= 0.5);
        CHECK(std::abs(c.y - 50) <= 0.5);
        CHECK_THROWS_WITH_AS(pupil_center(Mask(4, 4, 0)), "no pupil prediction", Error);
    }

    TEST_CASE("pupil centre is translation-equivariant")
    {
        std::mt19937_64 rng(51);
        std::bernoulli_distribution coin(0.1);
        for (int c = 0; c < 10; ++c) {
            Mask m(40, 30, 0), shifted(60, 50, 0);
            for (int y = 0; y < 30; ++y)
                for (int x = 0; x < 40; ++x)
                    if (coin(rng))
                        m.at(x, y) = shifted.at(x + 13, y + 7) = 1;
            if (count_set(m) == 0)
                continue;
            const PixelPoint a = pupil_center(m), b = pupil_center(shifted);
            CHECK(b.x == doctest::Approx(a.x + 13).epsilon(1e-12));
            CHECK(b.y == doctest::Approx(a.y + 7).epsilon(1e-12));
        }
    }

    TEST_CASE("luminance threshold")
    {
        const TwoDiscs d;
        CHECK(luminance_threshold(d.image, d.masks) == 30.0);
        CHECK(luminance_threshold(GrayImage(120, 120, 77.0), d.masks) == 77.0);
        MaskSet no_iris = d.masks;
        no_iris.iris = Mask(120, 120, 0);
        CHECK_THROWS_AS(luminance_threshold(d.image, no_iris), Error);
    }

    TEST_CASE("threshold lies between the class means on renders")
    {
        for (const auto& e : bench::generate_corpus(bench::Profile::Clean, 10, 7)) {
            const double th = luminance_threshold(e.image, *e.truth);
            double cp = 0, ci = 0;
            for (std::size_t k = 0; k < e.image.size(); ++k) {
                cp += e.truth->pupil[k] ? e.image[k] : 0.0;
                ci += e.truth->iris[k] ? e.image[k] : 0.0;
            }
            cp /= static_cast<double>(count_set(e.truth->pupil));
            ci /= static_cast<double>(count_set(e.truth->iris));
            CHECK(cp < ci);
            CHECK(cp < th);
            CHECK(th < ci);
        }
    }

    TEST_CASE("prior filter examples")
    {
        const TwoDiscs d;
        const IgnoreSets clean = prior_filter(d.image, d.masks, 30.0);
        CHECK(count_set(clean.pupil) == 0);
        CHECK(count_set(clean.iris) == 0);

        // Pupil prediction reaching 10 px into the iris.
        MaskSet over = d.masks;
        over.pupil = testing::disc_mask(120, 120, 60, 60, 30);
        const IgnoreSets a = prior_filter(d.image, over, 30.0);
        CHECK(a.pupil == mask_difference(over.pupil, d.masks.pupil));

        // Iris prediction holding a strip of pupil.
        MaskSet strip = d.masks;
        for (int x = 55; x < 65; ++x)
            for (int y = 45; y < 75; ++y)
                strip.iris.at(x, y) = 1;
        const IgnoreSets b = prior_filter(d.image, strip, 30.0);
        CHECK(b.iris == mask_intersection(strip.iris, d.masks.pupil));

        // Boundary luminance equal to th_c is kept.
        CHECK(count_set(prior_filter(d.image, over, 50.0).pupil) == 0);
    }

    TEST_CASE("prior filter is idempotent and stays inside the masks")
    {
        std::mt19937_64 rng(52);
        std::uniform_real_distribution<double> u(0.0, 255.0);
        std::bernoulli_distribution coin(0.3);
        for (int c = 0; c < 10; ++c) {
            GrayImage img(30, 20);
            MaskSet m = MaskSet::empty(30, 20);
            for (std::size_t k = 0; k < img.size(); ++k) {
                img[k] = std::round(u(rng));
                m.pupil[k] = coin(rng);
                m.iris[k] = coin(rng);
            }
            const double th = u(rng);
            const IgnoreSets a = prior_filter(img, m, th), b = prior_filter(img, m, th);
            CHECK(a.pupil == b.pupil);
            CHECK(a.iris == b.iris);
            CHECK(mask_subset(a.pupil, m.pupil));
            CHECK(mask_subset(a.iris, m.iris));
        }
    }

    TEST_CASE("ignored labels are dropped")
    {
        IndicationMap map(3, 1, Label::Pupil);
        map.at(2, 0) = Label::Iris;
        IgnoreSets ig{Mask(3, 1, 0), Mask(3, 1, 0)};
        ig.pupil.at(1, 0) = 1;
        ig.iris.at(0, 0) = 1; // not an Iris label, so untouched
        ig.iris.at(2, 0) = 1;
        const IndicationMap out = drop_ignored(map, ig);
        CHECK(out.at(0, 0) == Label::Pupil);
        CHECK(out.at(1, 0) == Label::Ignore);
        CHECK(out.at(2, 0) == Label::Ignore);
    }

    TEST_CASE("one round equals a single indicate and densify pass")
    {
        const auto corpus = bench::generate_corpus(bench::Profile::Clean, 3, 7);
        PipelineParams params;
        params.schedule = Schedule::for_rounds(1);
        const auto out = run_progressive_pipeline(inputs_of(corpus), params, nullptr, {true, false, {}, {}, 1});
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            const GrayImage& img = corpus[i].image;
            const PixelPoint o = locate_pupil_point(img, params.locator);
            const PiiResult pii = generate_pupil_iris_indications(img, o, params.pii);
            const PupilIrisFit fit = densify_pupil_iris(pii.map, pii.fan);
            const Mask eye = mask_union(rasterize_ellipse(fit.pupil, img.width(), img.height()),
                                        rasterize_ellipse(fit.iris, img.width(), img.height()));
            CHECK(out[i].masks == masks_from_ellipses(fit.pupil, fit.iris, eye));
            CHECK(out[i].masks == out[i].round0);
        }
    }

    TEST_CASE("later rounds do not lose pupil accuracy")
    {
        const auto corpus = bench::generate_corpus(bench::Profile::Clean, 30, 7);
        std::map<std::string, Mask> eyes;
        for (const auto& e : corpus)
            eyes.emplace(e.id, e.truth->eye);
        const MockPerturbedOracle oracle(eyes, 7);
        const auto out = run_progressive_pipeline(inputs_of(corpus), PipelineParams{}, &oracle);
        double first = 0.0, last = 0.0, worst_drop = 0.0;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            const double a = bench::iou(out[i].round0.pupil, corpus[i].truth->pupil);
            const double b = bench::iou(out[i].masks.pupil, corpus[i].truth->pupil);
            first += a;
            last += b;
            worst_drop = std::max(worst_drop, a - b);
        }
        CHECK(last >= first);
        CHECK(worst_drop <= 0.01);
    }

    TEST_CASE("thread count does not change results")
    {
        const auto corpus = bench::generate_corpus(bench::Profile::Occluded, 4, 7);
        std::map<std::string, Mask> eyes;
        for (const auto& e : corpus)
            eyes.emplace(e.id, e.truth->eye);
        const MockPerturbedOracle oracle(eyes, 7);
        PipelineOptions serial, parallel;
        parallel.jobs = 3;
        const auto a = run_progressive_pipeline(inputs_of(corpus), PipelineParams{}, &oracle, serial);
        const auto b = run_progressive_pipeline(inputs_of(corpus), PipelineParams{}, &oracle, parallel);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].id == b[i].id);
            CHECK(a[i].masks == b[i].masks);
        }
    }

    TEST_CASE("an image without a pupil is recorded, not fatal")
    {
        const auto corpus = bench::generate_corpus(bench::Profile::Clean, 1, 7);
        std::vector<PipelineInput> in = {{"blank", GrayImage(640, 400, 128.0)}, {corpus[0].id, corpus[0].image}};
        PipelineOptions opts;
        opts.oracle_refinement = false;
        const auto out = run_progressive_pipeline(in, PipelineParams{}, nullptr, opts);
        CHECK(out[0].failed);
        CHECK(out[0].error == "no pupil found");
        CHECK(count_set(out[0].masks.eye) == 0);
        CHECK_FALSE(out[1].failed);
    }

    TEST_CASE("forced origins skip the locator")
    {
        const auto corpus = bench::generate_corpus(bench::Profile::Clean, 1, 7);
        const auto& spec = *corpus[0].spec;
        PipelineOptions opts;
        opts.oracle_refinement = false;
        opts.origins = {spec.pupil.center};
        PipelineParams params;
        params.schedule = Schedule::for_rounds(1);
        const auto out = run_progressive_pipeline(inputs_of(corpus), params, nullptr, opts);
        CHECK(out[0].origin == spec.pupil.center);
    }

    TEST_CASE("eye from initial indications")
    {
        const RayFan fan({100, 100}, 360, 200, 200);
        IndicationMap m(200, 200, Label::Ignore);
        for (int i = 0; i < 360; ++i) {
            const auto s = fan.samples(i);
            for (int t = 0; t < static_cast<int>(s.size()); ++t)
                if (t < 40 || t > 60)
                    m.at(s[t].x, s[t].y) = t < 40 ? Label::EyeFg : Label::EyeBg;
        }
        const Mask eye = eye_from_initial(m, fan);
        CHECK(bench::iou(eye, testing::disc_mask(200, 200, 100, 100, 50)) > 0.95);

        IndicationMap fg_only(200, 200, Label::Ignore);
        fg_only.at(90, 90) = fg_only.at(110, 90) = fg_only.at(100, 110) = Label::EyeFg;
        CHECK(eye_from_initial(fg_only, fan) == convex_hull_mask(label_mask(fg_only, Label::EyeFg)));
    }
}
