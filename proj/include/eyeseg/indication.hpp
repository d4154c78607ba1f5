#pragma once

#include "eyeseg/io.hpp"
#include "eyeseg/raster.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace eyeseg {

/// Sparse pseudo-label. The numeric values are the palette indices written to disk.
enum class Label : std::uint8_t
{
    Ignore = 0,
    Pupil = 1,
    Iris = 2,
    Background = 3,
    EyeFg = 4,
    EyeBg = 5,
};

inline constexpr int kLabelCount = 6;

using IndicationMap = Raster<Label>;

const char* label_name(Label l);

std::size_t count_label(const IndicationMap& map, Label l);

/// Binary mask of the pixels carrying `l`.
Mask label_mask(const IndicationMap& map, Label l);

/// Rasterises per-sample labels from several rays. A pixel that receives two
/// different labels becomes Ignore for good, so the result does not depend on
/// the order in which rays are written.
class LabelCanvas
{
public:
    LabelCanvas(int width, int height);

    void put(int x, int y, Label l);
    /// Writes `l` unconditionally; the pixel is no longer subject to conflict resolution.
    void force(int x, int y, Label l);

    IndicationMap finish() const;

private:
    static constexpr std::uint8_t kEmpty = 0;
    static constexpr std::uint8_t kConflict = 0xFE;
    static constexpr std::uint8_t kForced = 0x80;
    Raster<std::uint8_t> state_;
};

namespace io {

/// Fixed palette for indication PNGs, indexed by Label.
const std::vector<Rgb>& indication_palette();

Bytes encode_indication_png(const IndicationMap& map);
IndicationMap decode_indication_png(const Bytes& bytes);

/// Plain-text `key = value` lines, sorted by key.
std::string format_key_values(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> parse_key_values(const std::string& text);

} // namespace io

} // namespace eyeseg
