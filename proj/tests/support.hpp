#pragma once

#include "eyeseg/bench.hpp"
#include "eyeseg/runner.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

namespace eyeseg::testing {

inline Mask disc_mask(int width, int height, double cx, double cy, double r)
{
    Mask m(width, height, 0);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            m.at(x, y) = (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
    return m;
}

inline GrayImage disc_image(int width, int height, double cx, double cy, double r, double inside, double outside)
{
    GrayImage img(width, height, outside);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r)
                img.at(x, y) = inside;
    return img;
}

/// Noise-free, hard-edged scene with uniform region levels.
inline bench::EyeSceneSpec flat_scene()
{
    bench::EyeSceneSpec s;
    s.pupil_blur = s.limbus_blur = s.lid_blur = 0.0;
    s.iris_texture = s.skin_texture = s.lid_margin = 0.0;
    s.noise_sigma = 0.0;
    s.glints.clear();
    return s;
}

inline std::vector<std::pair<std::string, MaskSet>> truth_of(const std::vector<bench::CorpusEntry>& corpus)
{
    std::vector<std::pair<std::string, MaskSet>> out;
    for (const auto& e : corpus)
        out.emplace_back(e.id, *e.truth);
    return out;
}

/// A loopback port with nothing listening on it.
inline int closed_port()
{
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    socklen_t len = sizeof addr;
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), len);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return ntohs(addr.sin_port);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("eyeseg_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b)
{
    std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Moves the pupil boundary of a seeded `fraction` of labelled rays outward
/// by 5..15 samples, staying short of the iris boundary.
inline SegmentHook oversegment_pupil(double fraction, std::uint64_t seed)
{
    return [fraction, seed](std::size_t image, int round, const RayFan&, std::vector<RaySegmentLabel>& segments) {
        std::mt19937_64 rng(mix(mix(seed, image), static_cast<std::uint64_t>(round)));
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        std::uniform_int_distribution<int> shift(5, 15);
        for (auto& s : segments) {
            const bool hit = coin(rng) < fraction;
            const int d = shift(rng);
            if (hit && s.labeled())
                s.pupil_end = std::min(s.pupil_end + d, s.iris_end - 1);
        }
    };
}

} // namespace eyeseg::testing
