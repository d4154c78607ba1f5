#include "eyeseg/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

namespace eyeseg::io {

namespace {

struct ReadCursor
{
    const Bytes* bytes;
    std::size_t pos;
};

thread_local char g_png_message[256];

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg)
{
    std::snprintf(g_png_message, sizeof g_png_message, "png: %s", msg);
    png_longjmp(png, 1);
}

// Runs libpng calls under a setjmp guard. `f` must not own objects with
// non-trivial destructors: a libpng error longjmps straight out of it.
template <typename F>
void guarded(png_structp png, F&& f)
{
    if (setjmp(png_jmpbuf(png)))
        throw Error(g_png_message);
    f();
}

void png_warning_fn(png_structp, png_const_charp) {}

void read_fn(png_structp png, png_bytep out, png_size_t n)
{
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->pos + n > cur->bytes->size())
        png_error(png, "truncated stream");
    std::memcpy(out, cur->bytes->data() + cur->pos, n);
    cur->pos += n;
}

void write_fn(png_structp png, png_bytep data, png_size_t n)
{
    auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + n);
}

void flush_fn(png_structp) {}

bool is_png(const Bytes& b)
{
    return b.size() >= 8 && png_sig_cmp(b.data(), 0, 8) == 0;
}

class PngReader
{
public:
    explicit PngReader(const Bytes& bytes) : cursor_{&bytes, 0}
    {
        png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
        if (!png_)
            throw Error("png: cannot create read struct");
        info_ = png_create_info_struct(png_);
        if (!info_) {
            png_destroy_read_struct(&png_, nullptr, nullptr);
            throw Error("png: cannot create info struct");
        }
        png_set_read_fn(png_, &cursor_, read_fn);
        try {
            guarded(png_, [&] { png_read_info(png_, info_); });
        } catch (...) {
            png_destroy_read_struct(&png_, &info_, nullptr);
            throw;
        }
    }
    ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
    PngReader(const PngReader&) = delete;
    PngReader& operator=(const PngReader&) = delete;

    png_structp png() { return png_; }
    png_infop info() { return info_; }

    std::vector<png_byte> read_rows(std::size_t& rowbytes)
    {
        guarded(png_, [&] { png_read_update_info(png_, info_); });
        const auto h = png_get_image_height(png_, info_);
        rowbytes = png_get_rowbytes(png_, info_);
        std::vector<png_byte> buf(rowbytes * h);
        std::vector<png_bytep> rows(h);
        for (png_uint_32 y = 0; y < h; ++y)
            rows[y] = buf.data() + y * rowbytes;
        guarded(png_, [&] {
            png_read_image(png_, rows.data());
            png_read_end(png_, nullptr);
        });
        return buf;
    }

private:
    ReadCursor cursor_;
    png_structp png_ = nullptr;
    png_infop info_ = nullptr;
};

class PngWriter
{
public:
    PngWriter()
    {
        png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
        if (!png_)
            throw Error("png: cannot create write struct");
        info_ = png_create_info_struct(png_);
        if (!info_) {
            png_destroy_write_struct(&png_, nullptr);
            throw Error("png: cannot create info struct");
        }
        png_set_write_fn(png_, &out_, write_fn, flush_fn);
    }
    ~PngWriter() { png_destroy_write_struct(&png_, &info_); }
    PngWriter(const PngWriter&) = delete;
    PngWriter& operator=(const PngWriter&) = delete;

    png_structp png() { return png_; }
    png_infop info() { return info_; }

    Bytes finish(const std::vector<png_byte>& buf, std::size_t rowbytes, int height)
    {
        std::vector<png_bytep> rows(static_cast<std::size_t>(height));
        for (int y = 0; y < height; ++y)
            rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(buf.data() + y * rowbytes);
        guarded(png_, [&] {
            png_write_info(png_, info_);
            png_write_image(png_, rows.data());
            png_write_end(png_, nullptr);
        });
        return std::move(out_);
    }

private:
    Bytes out_;
    png_structp png_ = nullptr;
    png_infop info_ = nullptr;
};

GrayImage decode_png(const Bytes& bytes, const WarningSink& warn)
{
    PngReader r(bytes);
    auto* png = r.png();
    auto* info = r.info();
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    guarded(png, [&] {
        if (color == PNG_COLOR_TYPE_PALETTE)
            png_set_palette_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
            png_set_expand_gray_1_2_4_to_8(png);
        if (depth == 16)
            png_set_strip_16(png);
        if (color & PNG_COLOR_MASK_ALPHA)
            png_set_strip_alpha(png);
        if (png_get_valid(png, info, PNG_INFO_tRNS)) {
            png_set_tRNS_to_alpha(png);
            png_set_strip_alpha(png);
        }
    });

    std::size_t rowbytes = 0;
    const auto buf = r.read_rows(rowbytes);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    if (channels > 1 && warn)
        warn("colour image converted to grey by channel average");

    GrayImage img(w, h);
    for (int y = 0; y < h; ++y) {
        const png_byte* row = buf.data() + static_cast<std::size_t>(y) * rowbytes;
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int c = 0; c < channels; ++c)
                s += row[x * channels + c];
            img.at(x, y) = s / channels;
        }
    }
    return img;
}

std::uint8_t to_byte(double v)
{
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

} // namespace

Bytes read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, const Bytes& bytes)
{
    // Unique-enough suffix so concurrent writers in one directory never share a temp file.
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    auto tmp = path;
    tmp += ".tmp" + std::to_string(rng() % 1000000007ULL);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out)
            throw Error("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("cannot rename into " + path.string() + ": " + ec.message());
    }
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text)
{
    write_file_atomic(path, Bytes(text.begin(), text.end()));
}

GrayImage decode_image(const Bytes& bytes, const WarningSink& warn)
{
    if (is_png(bytes))
        return decode_png(bytes, warn);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5')
        return decode_pgm(bytes);
    throw Error("unsupported image format (expected PNG or binary PGM)");
}

GrayImage read_image(const std::filesystem::path& path, const WarningSink& warn)
{
    return decode_image(read_file(path), warn);
}

Bytes encode_gray_png(const Raster<std::uint8_t>& image)
{
    PngWriter wr;
    guarded(wr.png(), [&] {
        png_set_IHDR(wr.png(), wr.info(), static_cast<png_uint_32>(image.width()),
                     static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    });
    return wr.finish(image.data(), static_cast<std::size_t>(image.width()), image.height());
}

Bytes encode_gray_png(const GrayImage& image)
{
    Raster<std::uint8_t> bytes(image.width(), image.height());
    for (std::size_t i = 0; i < image.size(); ++i)
        bytes[i] = to_byte(image[i]);
    return encode_gray_png(bytes);
}

void write_gray_png(const std::filesystem::path& path, const GrayImage& image)
{
    write_file_atomic(path, encode_gray_png(image));
}

Bytes encode_indexed_png(const Raster<std::uint8_t>& indices, const std::vector<Rgb>& palette)
{
    if (palette.empty() || palette.size() > 256)
        throw Error("palette must hold 1..256 entries");
    for (auto v : indices.data())
        if (v >= palette.size())
            throw Error("palette index " + std::to_string(v) + " out of range");
    PngWriter wr;
    std::vector<png_color> pal;
    pal.reserve(palette.size());
    for (const auto& c : palette)
        pal.push_back(png_color{c[0], c[1], c[2]});
    guarded(wr.png(), [&] {
        png_set_IHDR(wr.png(), wr.info(), static_cast<png_uint_32>(indices.width()),
                     static_cast<png_uint_32>(indices.height()), 8, PNG_COLOR_TYPE_PALETTE, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_set_PLTE(wr.png(), wr.info(), pal.data(), static_cast<int>(pal.size()));
    });
    return wr.finish(indices.data(), static_cast<std::size_t>(indices.width()), indices.height());
}

Raster<std::uint8_t> decode_indexed_png(const Bytes& bytes)
{
    if (!is_png(bytes))
        throw Error("not a PNG stream");
    PngReader r(bytes);
    if (png_get_color_type(r.png(), r.info()) != PNG_COLOR_TYPE_PALETTE)
        throw Error("expected a palette PNG");
    if (png_get_bit_depth(r.png(), r.info()) < 8)
        guarded(r.png(), [&] { png_set_packing(r.png()); });
    std::size_t rowbytes = 0;
    const auto buf = r.read_rows(rowbytes);
    const int w = static_cast<int>(png_get_image_width(r.png(), r.info()));
    const int h = static_cast<int>(png_get_image_height(r.png(), r.info()));
    Raster<std::uint8_t> out(w, h);
    for (int y = 0; y < h; ++y)
        std::memcpy(&out.at(0, y), buf.data() + static_cast<std::size_t>(y) * rowbytes, static_cast<std::size_t>(w));
    return out;
}

Bytes encode_rgb_png(int width, int height, const std::vector<Rgb>& pixels)
{
    if (pixels.size() != static_cast<std::size_t>(width) * height)
        throw Error("rgb pixel count mismatch");
    PngWriter wr;
    guarded(wr.png(), [&] {
        png_set_IHDR(wr.png(), wr.info(), static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                     PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    });
    std::vector<png_byte> buf(pixels.size() * 3);
    for (std::size_t i = 0; i < pixels.size(); ++i)
        std::copy(pixels[i].begin(), pixels[i].end(), buf.begin() + static_cast<std::ptrdiff_t>(3 * i));
    return wr.finish(buf, static_cast<std::size_t>(width) * 3, height);
}

GrayImage decode_pgm(const Bytes& bytes)
{
    std::size_t pos = 2;
    auto skip_ws = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&] {
        skip_ws();
        long v = 0;
        bool any = false;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos++] - '0');
            any = true;
            if (v > 1 << 24)
                throw Error("pgm: header value too large");
        }
        if (!any)
            throw Error("pgm: malformed header");
        return static_cast<int>(v);
    };
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw Error("pgm: expected binary P5 magic");
    const int w = read_int();
    const int h = read_int();
    const int maxval = read_int();
    if (maxval <= 0 || maxval > 65535)
        throw Error("pgm: bad maxval");
    ++pos; // single whitespace after maxval
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    if (bytes.size() < pos + static_cast<std::size_t>(w) * h * bpp)
        throw Error("pgm: truncated raster");
    GrayImage img(w, h);
    for (std::size_t i = 0; i < img.size(); ++i) {
        double v = bpp == 1 ? bytes[pos + i] : (bytes[pos + 2 * i] << 8 | bytes[pos + 2 * i + 1]);
        img[i] = v * 255.0 / maxval;
    }
    return img;
}

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const Bytes& bytes)
{
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const unsigned v = bytes[i] << 16 | bytes[i + 1] << 8 | bytes[i + 2];
        out += kB64[v >> 18 & 63];
        out += kB64[v >> 12 & 63];
        out += kB64[v >> 6 & 63];
        out += kB64[v & 63];
    }
    if (i < bytes.size()) {
        unsigned v = bytes[i] << 16;
        if (i + 1 < bytes.size())
            v |= bytes[i + 1] << 8;
        out += kB64[v >> 18 & 63];
        out += kB64[v >> 12 & 63];
        out += i + 1 < bytes.size() ? kB64[v >> 6 & 63] : '=';
        out += '=';
    }
    return out;
}

Bytes base64_decode(std::string_view text)
{
    std::array<int, 256> lut;
    lut.fill(-1);
    for (int i = 0; i < 64; ++i)
        lut[static_cast<unsigned char>(kB64[i])] = i;
    Bytes out;
    out.reserve(text.size() / 4 * 3);
    unsigned acc = 0;
    int bits = 0;
    for (char ch : text) {
        if (ch == '=' || std::isspace(static_cast<unsigned char>(ch)))
            continue;
        const int v = lut[static_cast<unsigned char>(ch)];
        if (v < 0)
            throw Error("base64: invalid character");
        acc = acc << 6 | static_cast<unsigned>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>(acc >> bits & 0xFF));
        }
    }
    return out;
}

} // namespace eyeseg::io
