#pragma once

#include "eyeseg/raster.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace eyeseg {

/// Connection failures and 503 replies; the call may be retried.
class OracleTransportError : public Error
{
public:
    using Error::Error;
};

/// Malformed replies, 422 and dimension mismatches; retrying will not help.
class OracleProtocolError : public Error
{
public:
    using Error::Error;
};

struct SegmentationRequest
{
    std::string id; ///< image identifier, used by the lookup adapters only
    GrayImage image;
    std::vector<PixelIndex> positive;
    std::vector<PixelIndex> negative;

    /// At least one positive point, every point inside the image.
    void validate() const;
};

struct SegmentationResponse
{
    Mask mask;
    double confidence = 1.0;
};

class SegmentationOracle
{
public:
    virtual ~SegmentationOracle() = default;

    /// Safe to call from several threads at once.
    virtual SegmentationResponse segment(const SegmentationRequest& request) const = 0;
};

/// Ground-truth mask with its boundary displaced by smooth polar noise of
/// amplitude <= `amplitude` about the mask centroid, plus one square defect
/// of side 2 * amplitude either cut just inside the boundary or stuck just
/// outside it. Amplitude 0 returns the mask unchanged.
Mask mock_perturbed_segment(const Mask& gt, std::uint64_t seed, double amplitude);

/// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t stable_hash(const std::string& text);

/// Ignores the prompts: answers with the perturbed ground-truth eye mask of
/// the requested image id.
class MockPerturbedOracle : public SegmentationOracle
{
public:
    MockPerturbedOracle(std::map<std::string, Mask> truth, std::uint64_t seed, double amplitude = 8.0);

    SegmentationResponse segment(const SegmentationRequest& request) const override;

private:
    std::map<std::string, Mask> truth_;
    std::uint64_t seed_;
    double amplitude_;
};

/// Serves `<dir>/<id>.png`. Grey PNGs are thresholded at 128; palette PNGs
/// count every non-zero index as positive.
class FileOracle : public SegmentationOracle
{
public:
    explicit FileOracle(std::filesystem::path dir);

    SegmentationResponse segment(const SegmentationRequest& request) const override;

private:
    std::filesystem::path dir_;
};

struct HttpOracleOptions
{
    int attempts = 3;
    std::chrono::milliseconds backoff{200};
    std::chrono::seconds connect_timeout{5};
    std::chrono::seconds read_timeout{120};
};

/// Client for POST /segment. Each call opens its own connection.
class HttpOracle : public SegmentationOracle
{
public:
    /// `base_url` like "http://host:port".
    explicit HttpOracle(std::string base_url, HttpOracleOptions options = {});

    SegmentationResponse segment(const SegmentationRequest& request) const override;

private:
    std::string base_url_;
    HttpOracleOptions options_;
};

/// "mock", "file:<dir>" or "http://host:port" (also "http:host:port").
/// `truth` feeds the mock and may be empty for the other kinds.
std::unique_ptr<SegmentationOracle> make_oracle(const std::string& spec, std::map<std::string, Mask> truth,
                                                std::uint64_t seed);

namespace wire {

/// {"image": base64 PNG, "positive": [[x,y],...], "negative": [[x,y],...]}
std::string encode_request(const SegmentationRequest& request);
/// Throws OracleProtocolError on malformed JSON, bad base64/PNG or bad points.
SegmentationRequest decode_request(const std::string& body);

/// {"mask": base64 PNG with 0/255 values, "confidence": c}
std::string encode_response(const SegmentationResponse& response);
SegmentationResponse decode_response(const std::string& body);

Mask mask_from_png(const std::vector<std::uint8_t>& png);

} // namespace wire

} // namespace eyeseg
