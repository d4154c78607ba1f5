#include "eyeseg/oracle.hpp"

#include "eyeseg/io.hpp"

#include <httplib.h>
#include <json.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

namespace eyeseg {

void SegmentationRequest::validate() const
{
    if (image.empty())
        throw Error("segmentation request without an image");
    if (positive.empty())
        throw Error("segmentation request needs at least one positive point");
    for (const auto* list : {&positive, &negative})
        for (const auto& p : *list)
            if (!image.contains(p.x, p.y))
                throw Error("prompt (" + std::to_string(p.x) + "," + std::to_string(p.y) + ") lies outside the image");
}

std::uint64_t stable_hash(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Mask mock_perturbed_segment(const Mask& gt, std::uint64_t seed, double amplitude)
{
    if (!(amplitude >= 0.0))
        throw Error("perturbation amplitude must be >= 0");
    const std::size_t area = count_set(gt);
    if (amplitude == 0.0 || area == 0)
        return gt;

    double cx = 0.0, cy = 0.0;
    for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x)
            if (gt.at(x, y)) {
                cx += x;
                cy += y;
            }
    cx /= static_cast<double>(area);
    cy /= static_cast<double>(area);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::array<double, 4> amp{}, ph{};
    double norm = 0.0;
    for (int m = 0; m < 4; ++m) {
        amp[m] = coef(rng);
        ph[m] = phase(rng);
        norm += std::abs(amp[m]);
    }
    // eta as a function of the unit direction (c1, s1); multiples by recurrence.
    const auto eta = [&](double c1, double s1) {
        double cm = c1, sm = s1, s = 0.0;
        for (int m = 0; m < 4; ++m) {
            s += amp[m] * (cm * std::cos(ph[m]) - sm * std::sin(ph[m]));
            const double cn = cm * c1 - sm * s1;
            sm = sm * c1 + cm * s1;
            cm = cn;
        }
        return norm > 0.0 ? amplitude * s / norm : 0.0;
    };

    const auto gt_at = [&](double x, double y) -> bool {
        const PixelIndex p = nearest_pixel({x, y});
        return gt.contains(p.x, p.y) && gt.at(p.x, p.y);
    };

    // Pixels further than the amplitude from the mask's bounding box stay empty.
    int bx0 = gt.width(), bx1 = -1, by0 = gt.height(), by1 = -1;
    for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x)
            if (gt.at(x, y)) {
                bx0 = std::min(bx0, x);
                bx1 = std::max(bx1, x);
                by0 = std::min(by0, y);
                by1 = std::max(by1, y);
            }
    const int pad = static_cast<int>(std::ceil(amplitude)) + 2;
    Mask out(gt.width(), gt.height(), 0);
    for (int y = std::max(0, by0 - pad); y <= std::min(gt.height() - 1, by1 + pad); ++y) {
        for (int x = std::max(0, bx0 - pad); x <= std::min(gt.width() - 1, bx1 + pad); ++x) {
            const double dx = x - cx, dy = y - cy;
            const double rho = std::hypot(dx, dy);
            if (rho == 0.0) {
                out.at(x, y) = gt_at(cx, cy);
                continue;
            }
            const double src = rho - eta(dx / rho, dy / rho);
            out.at(x, y) = src <= 0.0 ? gt_at(cx, cy) : gt_at(cx + dx / rho * src, cy + dy / rho * src);
        }
    }

    // One square defect astride a seeded boundary direction.
    const double theta = phase(rng);
    const bool cut = std::bernoulli_distribution(0.5)(rng);
    const double ux = std::cos(theta), uy = std::sin(theta);
    double r = 0.0;
    while (true) {
        const PixelIndex p = nearest_pixel({cx + ux * (r + 1.0), cy + uy * (r + 1.0)});
        if (!out.contains(p.x, p.y) || !out.at(p.x, p.y))
            break;
        r += 1.0;
    }
    const int side = std::max(1, static_cast<int>(std::floor(2.0 * amplitude)));
    const double d = cut ? r - side : r + side;
    const PixelIndex c = nearest_pixel({cx + ux * d, cy + uy * d});
    const int x0 = c.x - side / 2, y0 = c.y - side / 2;
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x)
            if (out.contains(x, y))
                out.at(x, y) = cut ? 0 : 1;
    return out;
}

MockPerturbedOracle::MockPerturbedOracle(std::map<std::string, Mask> truth, std::uint64_t seed, double amplitude)
    : truth_(std::move(truth)), seed_(seed), amplitude_(amplitude)
{
    if (!(amplitude >= 0.0))
        throw Error("perturbation amplitude must be >= 0");
}

SegmentationResponse MockPerturbedOracle::segment(const SegmentationRequest& request) const
{
    request.validate();
    const auto it = truth_.find(request.id);
    if (it == truth_.end())
        throw OracleProtocolError("mock oracle has no ground truth for image '" + request.id + "'");
    if (!it->second.same_shape(request.image))
        throw OracleProtocolError("mock ground truth for '" + request.id + "' has the wrong dimensions");
    return {mock_perturbed_segment(it->second, seed_ ^ stable_hash(request.id), amplitude_), 1.0};
}

FileOracle::FileOracle(std::filesystem::path dir) : dir_(std::move(dir))
{
    if (!std::filesystem::is_directory(dir_))
        throw Error("oracle mask directory " + dir_.string() + " does not exist");
}

SegmentationResponse FileOracle::segment(const SegmentationRequest& request) const
{
    request.validate();
    const Mask mask = wire::mask_from_png(io::read_file(dir_ / (request.id + ".png")));
    if (!mask.same_shape(request.image))
        throw OracleProtocolError("stored mask for '" + request.id + "' has the wrong dimensions");
    return {mask, 1.0};
}

HttpOracle::HttpOracle(std::string base_url, HttpOracleOptions options)
    : base_url_(std::move(base_url)), options_(options)
{
    if (options_.attempts < 1)
        throw Error("http oracle needs at least one attempt");
}

SegmentationResponse HttpOracle::segment(const SegmentationRequest& request) const
{
    request.validate();
    const std::string body = wire::encode_request(request);
    std::string last_error;
    for (int attempt = 0; attempt < options_.attempts; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(options_.backoff * attempt);
        httplib::Client client(base_url_);
        client.set_connection_timeout(options_.connect_timeout);
        client.set_read_timeout(options_.read_timeout);
        const auto res = client.Post("/segment", body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status == 503) {
            last_error = "service unavailable";
            continue;
        }
        if (res->status == 422)
            throw OracleProtocolError("oracle rejected the prompts: " + res->body);
        if (res->status != 200)
            throw OracleProtocolError("oracle answered HTTP " + std::to_string(res->status));
        SegmentationResponse out = wire::decode_response(res->body);
        if (!out.mask.same_shape(request.image))
            throw OracleProtocolError("oracle mask is " + std::to_string(out.mask.width()) + "x" +
                                      std::to_string(out.mask.height()) + ", image is " +
                                      std::to_string(request.image.width()) + "x" +
                                      std::to_string(request.image.height()));
        return out;
    }
    throw OracleTransportError("oracle at " + base_url_ + " unreachable after " + std::to_string(options_.attempts) +
                               " attempts: " + last_error);
}

std::unique_ptr<SegmentationOracle> make_oracle(const std::string& spec, std::map<std::string, Mask> truth,
                                                std::uint64_t seed)
{
    if (spec == "mock")
        return std::make_unique<MockPerturbedOracle>(std::move(truth), seed);
    if (spec.starts_with("file:"))
        return std::make_unique<FileOracle>(spec.substr(5));
    if (spec.starts_with("http://"))
        return std::make_unique<HttpOracle>(spec);
    if (spec.starts_with("http:"))
        return std::make_unique<HttpOracle>("http://" + spec.substr(5));
    throw Error("unknown oracle '" + spec + "' (expected mock, file:<dir> or http:<url>)");
}

namespace wire {

namespace {

using nlohmann::json;

json points_json(const std::vector<PixelIndex>& pts)
{
    json a = json::array();
    for (const auto& p : pts)
        a.push_back({p.x, p.y});
    return a;
}

std::vector<PixelIndex> points_from_json(const json& a, const char* key)
{
    if (!a.is_array())
        throw OracleProtocolError(std::string("'") + key + "' must be an array");
    std::vector<PixelIndex> out;
    for (const auto& p : a) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer())
            throw OracleProtocolError(std::string("'") + key + "' entries must be [x, y] integer pairs");
        out.push_back({p[0].get<int>(), p[1].get<int>()});
    }
    return out;
}

json parse(const std::string& body)
{
    try {
        json j = json::parse(body);
        if (!j.is_object())
            throw OracleProtocolError("protocol body must be a JSON object");
        return j;
    } catch (const json::exception& e) {
        throw OracleProtocolError(std::string("malformed JSON: ") + e.what());
    }
}

const json& field(const json& j, const char* key)
{
    const auto it = j.find(key);
    if (it == j.end())
        throw OracleProtocolError(std::string("missing field '") + key + "'");
    return *it;
}

io::Bytes base64_field(const json& j, const char* key)
{
    const json& v = field(j, key);
    if (!v.is_string())
        throw OracleProtocolError(std::string("'") + key + "' must be a base64 string");
    try {
        return io::base64_decode(v.get<std::string>());
    } catch (const Error& e) {
        throw OracleProtocolError(std::string("'") + key + "': " + e.what());
    }
}

} // namespace

std::string encode_request(const SegmentationRequest& request)
{
    json j;
    j["image"] = io::base64_encode(io::encode_gray_png(request.image));
    j["positive"] = points_json(request.positive);
    j["negative"] = points_json(request.negative);
    return j.dump();
}

SegmentationRequest decode_request(const std::string& body)
{
    const json j = parse(body);
    SegmentationRequest r;
    try {
        r.image = io::decode_image(base64_field(j, "image"));
    } catch (const OracleProtocolError&) {
        throw;
    } catch (const Error& e) {
        throw OracleProtocolError(std::string("'image': ") + e.what());
    }
    r.positive = points_from_json(field(j, "positive"), "positive");
    r.negative = points_from_json(field(j, "negative"), "negative");
    try {
        r.validate();
    } catch (const Error& e) {
        throw OracleProtocolError(e.what());
    }
    return r;
}

std::string encode_response(const SegmentationResponse& response)
{
    Raster<std::uint8_t> grey(response.mask.width(), response.mask.height(), 0);
    for (std::size_t i = 0; i < grey.size(); ++i)
        grey[i] = response.mask[i] ? 255 : 0;
    json j;
    j["mask"] = io::base64_encode(io::encode_gray_png(grey));
    j["confidence"] = response.confidence;
    return j.dump();
}

SegmentationResponse decode_response(const std::string& body)
{
    const json j = parse(body);
    SegmentationResponse r;
    try {
        r.mask = mask_from_png(base64_field(j, "mask"));
    } catch (const OracleProtocolError&) {
        throw;
    } catch (const Error& e) {
        throw OracleProtocolError(std::string("'mask': ") + e.what());
    }
    if (const auto it = j.find("confidence"); it != j.end()) {
        if (!it->is_number())
            throw OracleProtocolError("'confidence' must be a number");
        r.confidence = it->get<double>();
        if (!(r.confidence >= 0.0 && r.confidence <= 1.0))
            throw OracleProtocolError("'confidence' outside [0, 1]");
    }
    return r;
}

Mask mask_from_png(const std::vector<std::uint8_t>& png)
{
    // Colour type sits at byte 25 of a PNG (signature + IHDR header).
    constexpr std::size_t kColorTypeOffset = 25;
    if (png.size() > kColorTypeOffset && png[kColorTypeOffset] == 3) {
        Raster<std::uint8_t> idx = io::decode_indexed_png(png);
        for (auto& v : idx.data())
            v = v != 0;
        return idx;
    }
    const GrayImage g = io::decode_image(png);
    Mask m(g.width(), g.height(), 0);
    for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = g[i] >= 128.0;
    return m;
}

} // namespace wire

} // namespace eyeseg
