#include "eyeseg/bench.hpp"

#include "eyeseg/indication.hpp"
#include "eyeseg/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

namespace eyeseg::bench {

const char* profile_name(Profile p)
{
    switch (p) {
    case Profile::Clean:
        return "clean";
    case Profile::Occluded:
        return "occluded";
    case Profile::Noisy:
        return "noisy";
    }
    return "?";
}

Profile parse_profile(const std::string& name)
{
    for (Profile p : {Profile::Clean, Profile::Occluded, Profile::Noisy})
        if (name == profile_name(p))
            return p;
    throw Error("unknown profile '" + name + "' (expected clean, occluded or noisy)");
}

double Eyelids::upper_y(double x) const
{
    const double u = (x - cx) / half_width;
    return cy - upper * (1.0 - u * u);
}

double Eyelids::lower_y(double x) const
{
    const double u = (x - cx) / half_width;
    return cy + lower * (1.0 - u * u);
}

bool Eyelids::contains(double x, double y) const
{
    return y > upper_y(x) && y < lower_y(x);
}

void EyeSceneSpec::validate() const
{
    if (width < 16 || height < 16)
        throw Error("scene must be at least 16x16");
    if (!(pupil.a >= pupil.b && pupil.b > 0.0 && iris.a >= iris.b && iris.b > 0.0))
        throw Error("ellipse axes must satisfy a >= b > 0");
    const double c = std::cos(pupil.rotation), s = std::sin(pupil.rotation);
    for (int k = 0; k < 360; ++k) {
        const double t = k * std::numbers::pi / 180.0;
        const double x = pupil.center.x + pupil.a * std::cos(t) * c - pupil.b * std::sin(t) * s;
        const double y = pupil.center.y + pupil.a * std::cos(t) * s + pupil.b * std::sin(t) * c;
        if (!iris.contains(x, y))
            throw Error("pupil ellipse leaves the iris");
    }
    if (!(iris_level - pupil_level >= 20.0 && sclera_level - iris_level >= 20.0))
        throw Error("luminance levels must increase by >= 20 from pupil to iris to sclera");
    if (pupil_blur < 0 || limbus_blur < 0 || lid_blur < 0 || noise_sigma < 0 || glint_radius < 0)
        throw Error("blur, glint radius and noise must be non-negative");
    if (!(lids.half_width > 0.0 && lids.upper > 0.0 && lids.lower > 0.0))
        throw Error("eyelid opening must be positive");
}

namespace {

std::string num(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double get(const std::map<std::string, std::string>& kv, const std::string& key)
{
    const auto it = kv.find(key);
    if (it == kv.end())
        throw Error("scene spec lacks '" + key + "'");
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size())
            throw Error("");
        return v;
    } catch (const std::exception&) {
        throw Error("scene spec '" + key + "' is not a number: " + it->second);
    }
}

void put_ellipse(std::map<std::string, std::string>& kv, const std::string& name, const EllipseParams& e)
{
    kv[name + ".cx"] = num(e.center.x);
    kv[name + ".cy"] = num(e.center.y);
    kv[name + ".a"] = num(e.a);
    kv[name + ".b"] = num(e.b);
    kv[name + ".rotation"] = num(e.rotation);
}

EllipseParams get_ellipse(const std::map<std::string, std::string>& kv, const std::string& name)
{
    return EllipseParams{{get(kv, name + ".cx"), get(kv, name + ".cy")}, get(kv, name + ".a"), get(kv, name + ".b"),
                         get(kv, name + ".rotation")};
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Fraction of iris-ellipse pixels for which `hidden(x, y)` holds.
template <typename Hidden>
double iris_fraction(const EllipseParams& iris, int width, int height, Hidden hidden)
{
    std::size_t total = 0, covered = 0;
    const int x0 = std::max(0, static_cast<int>(iris.center.x - iris.a) - 1);
    const int x1 = std::min(width - 1, static_cast<int>(iris.center.x + iris.a) + 1);
    const int y0 = std::max(0, static_cast<int>(iris.center.y - iris.a) - 1);
    const int y1 = std::min(height - 1, static_cast<int>(iris.center.y + iris.a) + 1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (iris.contains(x, y)) {
                ++total;
                covered += hidden(x, y) ? 1 : 0;
            }
    return total ? static_cast<double>(covered) / static_cast<double>(total) : 0.0;
}

// Smallest opening (to 0.25 px) for which the lid hides at most `target` of the iris.
template <typename Coverage>
double opening_for(double target, double lo, double hi, Coverage coverage)
{
    while (hi - lo > 0.25) {
        const double mid = (lo + hi) / 2.0;
        if (coverage(mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

double signed_distance(const EllipseParams& e, double x, double y)
{
    const double c = std::cos(e.rotation), s = std::sin(e.rotation);
    const double dx = x - e.center.x, dy = y - e.center.y;
    const double u = (dx * c + dy * s) / e.a;
    const double v = (-dx * s + dy * c) / e.b;
    const double k = std::sqrt(u * u + v * v);
    if (k == 0.0)
        return -e.b;
    return (k - 1.0) * std::hypot(dx, dy) / k;
}

// Coverage of a soft edge at signed distance d (positive inside).
double soft(double d, double sigma)
{
    return 0.5 * std::erfc(-d / (sigma * std::numbers::sqrt2));
}

} // namespace

std::map<std::string, std::string> EyeSceneSpec::to_key_values() const
{
    std::map<std::string, std::string> kv;
    kv["seed"] = std::to_string(seed);
    kv["width"] = std::to_string(width);
    kv["height"] = std::to_string(height);
    put_ellipse(kv, "pupil", pupil);
    put_ellipse(kv, "iris", iris);
    kv["lids.cx"] = num(lids.cx);
    kv["lids.cy"] = num(lids.cy);
    kv["lids.half_width"] = num(lids.half_width);
    kv["lids.upper"] = num(lids.upper);
    kv["lids.lower"] = num(lids.lower);
    kv["level.pupil"] = num(pupil_level);
    kv["level.iris"] = num(iris_level);
    kv["level.sclera"] = num(sclera_level);
    kv["level.skin"] = num(skin_level);
    kv["blur.pupil"] = num(pupil_blur);
    kv["blur.limbus"] = num(limbus_blur);
    kv["blur.lid"] = num(lid_blur);
    kv["texture.iris"] = num(iris_texture);
    kv["texture.skin"] = num(skin_texture);
    kv["lid_margin"] = num(lid_margin);
    std::string g;
    for (const auto& p : glints)
        g += (g.empty() ? "" : ";") + num(p.x) + "," + num(p.y);
    kv["glints"] = g;
    kv["glint.radius"] = num(glint_radius);
    kv["glint.level"] = num(glint_level);
    kv["noise_sigma"] = num(noise_sigma);
    return kv;
}

EyeSceneSpec EyeSceneSpec::from_key_values(const std::map<std::string, std::string>& kv)
{
    EyeSceneSpec s;
    s.seed = static_cast<std::uint64_t>(std::stoull(kv.count("seed") ? kv.at("seed") : "0"));
    s.width = static_cast<int>(get(kv, "width"));
    s.height = static_cast<int>(get(kv, "height"));
    s.pupil = get_ellipse(kv, "pupil");
    s.iris = get_ellipse(kv, "iris");
    s.lids = Eyelids{get(kv, "lids.cx"), get(kv, "lids.cy"), get(kv, "lids.half_width"), get(kv, "lids.upper"),
                     get(kv, "lids.lower")};
    s.pupil_level = get(kv, "level.pupil");
    s.iris_level = get(kv, "level.iris");
    s.sclera_level = get(kv, "level.sclera");
    s.skin_level = get(kv, "level.skin");
    s.pupil_blur = get(kv, "blur.pupil");
    s.limbus_blur = get(kv, "blur.limbus");
    s.lid_blur = get(kv, "blur.lid");
    s.iris_texture = get(kv, "texture.iris");
    s.skin_texture = get(kv, "texture.skin");
    s.lid_margin = get(kv, "lid_margin");
    s.glint_radius = get(kv, "glint.radius");
    s.glint_level = get(kv, "glint.level");
    s.noise_sigma = get(kv, "noise_sigma");
    if (const auto it = kv.find("glints"); it != kv.end() && !it->second.empty()) {
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ';')) {
            const auto comma = item.find(',');
            if (comma == std::string::npos)
                throw Error("malformed glint entry '" + item + "'");
            s.glints.push_back({std::stod(item.substr(0, comma)), std::stod(item.substr(comma + 1))});
        }
    }
    s.validate();
    return s;
}

double iris_occlusion(const EyeSceneSpec& spec)
{
    return iris_fraction(spec.iris, spec.width, spec.height,
                         [&](int x, int y) { return !spec.lids.contains(x, y); });
}

EyeSceneSpec sample_scene(Profile profile, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const auto U = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };

    EyeSceneSpec s;
    s.seed = seed;
    s.lids.cx = 320.0 + U(-20.0, 20.0);
    s.lids.cy = 200.0 + U(-10.0, 10.0);
    s.lids.half_width = U(210.0, 240.0);

    const PixelPoint ic{s.lids.cx + U(-25.0, 25.0), s.lids.cy + U(-8.0, 8.0)};
    const double ia = U(75.0, 90.0);
    s.iris = EllipseParams{ic, ia, ia * U(0.93, 1.0), U(0.0, std::numbers::pi)};
    const double pa = U(22.0, 38.0);
    s.pupil = EllipseParams{{ic.x + U(-4.0, 4.0), ic.y + U(-4.0, 4.0)}, pa, pa * U(0.85, 1.0), U(0.0, std::numbers::pi)};

    s.pupil_level = U(20.0, 35.0);
    s.iris_level = U(80.0, 100.0);
    s.sclera_level = U(175.0, 190.0);
    s.skin_level = U(120.0, 150.0);

    const int glints = std::uniform_int_distribution<int>(1, 2)(rng);
    for (int g = 0; g < glints; ++g) {
        const double r = U(0.3, 0.6) * s.pupil.b;
        const double t = U(0.0, 2.0 * std::numbers::pi);
        s.glints.push_back({s.pupil.center.x + r * std::cos(t), s.pupil.center.y + r * std::sin(t)});
    }
    s.glint_radius = U(2.5, 4.0);

    const auto upper_cover = [&](double opening) {
        Eyelids l = s.lids;
        l.upper = opening;
        return iris_fraction(s.iris, s.width, s.height, [&](int x, int y) { return !(y > l.upper_y(x)); });
    };
    const auto lower_cover = [&](double opening) {
        Eyelids l = s.lids;
        l.lower = opening;
        return iris_fraction(s.iris, s.width, s.height, [&](int x, int y) { return !(y < l.lower_y(x)); });
    };
    const double max_upper = s.lids.cy - 8.0;
    const double max_lower = s.height - 8.0 - s.lids.cy;
    const double open_upper = opening_for(0.0, 1.0, max_upper, upper_cover);
    const double open_lower = opening_for(0.0, 1.0, max_lower, lower_cover);

    switch (profile) {
    case Profile::Clean:
    case Profile::Noisy:
        s.lids.upper = std::min(max_upper, open_upper + U(8.0, 25.0));
        s.lids.lower = std::min(max_lower, open_lower + U(8.0, 25.0));
        s.noise_sigma = profile == Profile::Clean ? 1.2 : U(4.0, 12.0);
        break;
    case Profile::Occluded: {
        const double f = U(0.10, 0.40);
        s.lids.upper = opening_for(0.65 * f, 1.0, max_upper, upper_cover);
        s.lids.lower = opening_for(0.35 * f, 1.0, max_lower, lower_cover);
        s.noise_sigma = 1.2;
        break;
    }
    }
    s.validate();
    return s;
}

RenderedEye render_eye(const EyeSceneSpec& spec)
{
    spec.validate();
    const int w = spec.width, h = spec.height;
    std::mt19937_64 rng(splitmix64(spec.seed ^ 0x5EEDULL));
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double sx = phase(rng), sy = phase(rng), ip = phase(rng);
    constexpr int kSpokes = 20;

    RenderedEye out{GrayImage(w, h), MaskSet::empty(w, h)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double yu = spec.lids.upper_y(x), yl = spec.lids.lower_y(x);
            const bool in_eye = spec.lids.contains(x, y);
            const bool in_iris = spec.iris.contains(x, y);
            const bool in_pupil = spec.pupil.contains(x, y);

            double skin = spec.skin_level + spec.skin_texture * std::sin(x / 23.0 + sx) * std::sin(y / 19.0 + sy);
            if (spec.lid_margin > 0.0 && std::abs(x - spec.lids.cx) < spec.lids.half_width) {
                const double du = yu - y, dl = y - yl;
                double m = 0.0;
                if (du > 0.0)
                    m = std::max(m, std::exp(-(du / 3.0) * (du / 3.0)));
                if (dl > 0.0)
                    m = std::max(m, std::exp(-(dl / 3.0) * (dl / 3.0)));
                skin -= spec.lid_margin * m;
            }

            const double eye_a = spec.lid_blur > 0.0
                                     ? soft(y - yu, spec.lid_blur) * soft(yl - y, spec.lid_blur)
                                     : (in_eye ? 1.0 : 0.0);
            const double iris_a = spec.limbus_blur > 0.0
                                      ? soft(-signed_distance(spec.iris, x, y), spec.limbus_blur)
                                      : (in_iris ? 1.0 : 0.0);
            const double pupil_a = spec.pupil_blur > 0.0
                                       ? soft(-signed_distance(spec.pupil, x, y), spec.pupil_blur)
                                       : (in_pupil ? 1.0 : 0.0);

            double iris = spec.iris_level;
            if (spec.iris_texture > 0.0) {
                const double t = std::atan2(y - spec.iris.center.y, x - spec.iris.center.x);
                iris += spec.iris_texture * std::sin(kSpokes * t + ip);
            }
            double ball = spec.sclera_level * (1.0 - iris_a) + iris * iris_a;
            ball = ball * (1.0 - pupil_a) + spec.pupil_level * pupil_a;
            for (const auto& g : spec.glints) {
                const double d = spec.glint_radius - std::hypot(x - g.x, y - g.y);
                if (d > -4.0) {
                    const double a = soft(d, 0.7);
                    ball = ball * (1.0 - a) + spec.glint_level * a;
                }
            }
            out.image.at(x, y) = skin * (1.0 - eye_a) + ball * eye_a;

            if (in_eye) {
                out.truth.eye.at(x, y) = 1;
                if (in_pupil && in_iris)
                    out.truth.pupil.at(x, y) = 1;
                else if (in_iris)
                    out.truth.iris.at(x, y) = 1;
            }
        }
    }

    std::normal_distribution<double> noise(0.0, 1.0);
    for (auto& v : out.image.data()) {
        if (spec.noise_sigma > 0.0)
            v += spec.noise_sigma * noise(rng);
        v = std::clamp(std::round(v), 0.0, 255.0);
    }
    return out;
}

double iou(const Mask& pred, const Mask& gt)
{
    require_same_shape(pred, gt, "iou");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool a = pred[i] != 0, b = gt[i] != 0;
        inter += a && b;
        uni += a || b;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

std::string image_id(int i)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", i);
    return buf;
}

} // namespace

std::vector<CorpusEntry> generate_corpus(Profile profile, int count, std::uint64_t seed)
{
    if (count < 1)
        throw Error("corpus needs at least one image");
    std::vector<CorpusEntry> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const std::uint64_t s =
            splitmix64(seed ^ splitmix64((static_cast<std::uint64_t>(profile) + 1) << 32 | static_cast<std::uint64_t>(i)));
        EyeSceneSpec spec = sample_scene(profile, s);
        RenderedEye r = render_eye(spec);
        out.push_back({image_id(i), std::move(r.image), std::move(r.truth), std::move(spec)});
    }
    return out;
}

void write_corpus(const std::filesystem::path& dir, const std::vector<CorpusEntry>& entries)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    for (const char* sub : {"images", "masks", "spec"}) {
        fs::create_directories(dir / sub, ec);
        if (ec)
            throw Error("cannot create " + (dir / sub).string() + ": " + ec.message());
    }
    for (const auto& e : entries) {
        io::write_file_atomic(dir / "images" / (e.id + ".png"), io::encode_gray_png(e.image));
        if (e.truth)
            io::write_file_atomic(dir / "masks" / (e.id + ".png"), io::encode_mask_set_png(*e.truth));
        if (e.spec)
            io::write_text_atomic(dir / "spec" / e.id, io::format_key_values(e.spec->to_key_values()));
    }
}

std::vector<CorpusEntry> read_corpus(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    const fs::path images = dir / "images";
    if (!fs::is_directory(images))
        throw Error("no images/ directory under " + dir.string());
    std::vector<std::string> ids;
    for (const auto& f : fs::directory_iterator(images))
        if (f.is_regular_file() && f.path().extension() == ".png")
            ids.push_back(f.path().stem().string());
    std::sort(ids.begin(), ids.end());
    if (ids.empty())
        throw Error("no PNG images under " + images.string());

    std::vector<CorpusEntry> out;
    for (const auto& id : ids) {
        CorpusEntry e;
        e.id = id;
        e.image = io::read_image(images / (id + ".png"));
        if (const fs::path m = dir / "masks" / (id + ".png"); fs::exists(m)) {
            e.truth = io::decode_mask_set_png(io::read_file(m));
            require_same_shape(e.truth->eye, e.image, "corpus mask");
        }
        if (const fs::path s = dir / "spec" / id; fs::exists(s)) {
            const io::Bytes b = io::read_file(s);
            e.spec = EyeSceneSpec::from_key_values(io::parse_key_values(std::string(b.begin(), b.end())));
        }
        out.push_back(std::move(e));
    }
    return out;
}

EvalReport evaluate(const std::vector<Prediction>& preds, const std::vector<std::pair<std::string, MaskSet>>& truth,
                    std::map<std::string, std::string> params)
{
    if (preds.size() != truth.size())
        throw Error("evaluate: " + std::to_string(preds.size()) + " predictions for " + std::to_string(truth.size()) +
                    " ground-truth images");
    EvalReport r;
    r.params = std::move(params);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto& p = preds[i];
        const auto& [gid, gt] = truth[i];
        if (p.id != gid)
            throw Error("evaluate: prediction '" + p.id + "' aligned with ground truth '" + gid + "'");
        ImageScore s;
        s.id = p.id;
        s.note = p.note;
        if (p.masks) {
            s.pupil = iou(p.masks->pupil, gt.pupil);
            s.iris = iou(p.masks->iris, gt.iris);
            s.eye = iou(p.masks->eye, gt.eye);
        } else {
            s.failed = true;
            ++r.failures;
        }
        r.mean_pupil += s.pupil;
        r.mean_iris += s.iris;
        r.mean_eye += s.eye;
        r.images.push_back(std::move(s));
    }
    if (!r.images.empty()) {
        const double n = static_cast<double>(r.images.size());
        r.mean_pupil /= n;
        r.mean_iris /= n;
        r.mean_eye /= n;
    }
    return r;
}

std::string EvalReport::to_text() const
{
    std::ostringstream o;
    char buf[160];
    o << "# IoU per image; both-empty counts as 1, failed images count as 0\n";
    for (const auto& [k, v] : params)
        o << "# " << k << " = " << v << "\n";
    std::snprintf(buf, sizeof buf, "%-12s %8s %8s %8s  %s\n", "id", "pupil", "iris", "eye", "note");
    o << buf;
    for (const auto& s : images) {
        std::snprintf(buf, sizeof buf, "%-12s %8.4f %8.4f %8.4f  ", s.id.c_str(), s.pupil, s.iris, s.eye);
        o << buf << (s.failed ? "FAILED " : "") << s.note << "\n";
    }
    std::snprintf(buf, sizeof buf, "%-12s %8.4f %8.4f %8.4f  failures=%zu/%zu\n", "mean", mean_pupil, mean_iris,
                  mean_eye, failures, images.size());
    o << buf;
    return o.str();
}

std::string EvalReport::to_json() const
{
    nlohmann::json j;
    j["conventions"] = {{"both_empty_iou", 1.0}, {"failed_image_iou", 0.0}};
    j["params"] = params;
    j["mean"] = {{"pupil", mean_pupil}, {"iris", mean_iris}, {"eye", mean_eye}};
    j["failures"] = failures;
    nlohmann::json imgs = nlohmann::json::array();
    for (const auto& s : images) {
        nlohmann::json e = {{"id", s.id}, {"pupil", s.pupil}, {"iris", s.iris}, {"eye", s.eye}, {"failed", s.failed}};
        if (!s.note.empty())
            e["note"] = s.note;
        imgs.push_back(std::move(e));
    }
    j["images"] = std::move(imgs);
    return j.dump(2) + "\n";
}

} // namespace eyeseg::bench
