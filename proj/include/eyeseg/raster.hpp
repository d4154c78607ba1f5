#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace eyeseg {

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct PixelPoint
{
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

struct Vec2
{
    double x = 0.0;
    double y = 0.0;

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm2() const { return x * x + y * y; }

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Dense row-major raster. All image-like types in the library are instances of this.
template <typename T>
class Raster
{
public:
    using value_type = T;

    Raster() = default;

    Raster(int width, int height, T fill = T{})
        : width_(width), height_(height)
    {
        if (width <= 0 || height <= 0)
            throw Error("raster dimensions must be positive, got " + std::to_string(width) + "x" +
                        std::to_string(height));
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    Raster(int width, int height, std::vector<T> data)
        : width_(width), height_(height), data_(std::move(data))
    {
        if (width <= 0 || height <= 0)
            throw Error("raster dimensions must be positive");
        if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw Error("raster data length does not match width x height");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    bool contains(const PixelPoint& p) const
    {
        return p.x >= 0.0 && p.y >= 0.0 && p.x < width_ && p.y < height_;
    }

    T& at(int x, int y) { return data_[index(x, y)]; }
    const T& at(int x, int y) const { return data_[index(x, y)]; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    template <typename U>
    bool same_shape(const Raster<U>& o) const
    {
        return width_ == o.width() && height_ == o.height();
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

/// Single-channel luminance image, values in [0, 255] stored as reals.
using GrayImage = Raster<double>;

/// Binary raster; any non-zero byte is "in".
using Mask = Raster<std::uint8_t>;

template <typename T, typename U>
void require_same_shape(const Raster<T>& a, const Raster<U>& b, const char* what)
{
    if (!a.same_shape(b))
        throw Error(std::string(what) + ": dimension mismatch (" + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()) + ")");
}

inline std::size_t count_set(const Mask& m)
{
    std::size_t n = 0;
    for (auto v : m.data())
        n += v != 0;
    return n;
}

/// Nearest pixel to a sub-pixel location.
struct PixelIndex
{
    int x = 0;
    int y = 0;
    friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

inline PixelIndex nearest_pixel(const PixelPoint& p)
{
    return {static_cast<int>(std::floor(p.x + 0.5)), static_cast<int>(std::floor(p.y + 0.5))};
}

} // namespace eyeseg
