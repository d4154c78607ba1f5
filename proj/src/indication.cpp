#include "eyeseg/indication.hpp"

#include <sstream>

namespace eyeseg {

const char* label_name(Label l)
{
    switch (l) {
    case Label::Ignore: return "ignore";
    case Label::Pupil: return "pupil";
    case Label::Iris: return "iris";
    case Label::Background: return "background";
    case Label::EyeFg: return "eye-fg";
    case Label::EyeBg: return "eye-bg";
    }
    return "?";
}

std::size_t count_label(const IndicationMap& map, Label l)
{
    std::size_t n = 0;
    for (auto v : map.data())
        n += v == l;
    return n;
}

Mask label_mask(const IndicationMap& map, Label l)
{
    Mask m(map.width(), map.height());
    for (std::size_t i = 0; i < map.size(); ++i)
        m[i] = map[i] == l;
    return m;
}

LabelCanvas::LabelCanvas(int width, int height) : state_(width, height, kEmpty) {}

void LabelCanvas::put(int x, int y, Label l)
{
    auto& s = state_.at(x, y);
    if (s & kForced)
        return;
    const auto v = static_cast<std::uint8_t>(static_cast<std::uint8_t>(l) + 1);
    if (s == kEmpty)
        s = v;
    else if (s != v)
        s = kConflict;
}

void LabelCanvas::force(int x, int y, Label l)
{
    state_.at(x, y) = static_cast<std::uint8_t>(kForced | (static_cast<std::uint8_t>(l) + 1));
}

IndicationMap LabelCanvas::finish() const
{
    IndicationMap out(state_.width(), state_.height(), Label::Ignore);
    for (std::size_t i = 0; i < state_.size(); ++i) {
        const std::uint8_t s = state_[i];
        if (s == kEmpty || s == kConflict)
            continue;
        out[i] = static_cast<Label>((s & ~kForced) - 1);
    }
    return out;
}

namespace io {

const std::vector<Rgb>& indication_palette()
{
    static const std::vector<Rgb> palette = {
        {0, 0, 0},       // ignore
        {220, 30, 30},   // pupil
        {20, 40, 160},   // iris
        {140, 200, 255}, // background
        {40, 200, 60},   // eye foreground
        {120, 180, 240}, // eye background
    };
    return palette;
}

Bytes encode_indication_png(const IndicationMap& map)
{
    Raster<std::uint8_t> idx(map.width(), map.height());
    for (std::size_t i = 0; i < map.size(); ++i)
        idx[i] = static_cast<std::uint8_t>(map[i]);
    return encode_indexed_png(idx, indication_palette());
}

IndicationMap decode_indication_png(const Bytes& bytes)
{
    const auto idx = decode_indexed_png(bytes);
    IndicationMap map(idx.width(), idx.height());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= kLabelCount)
            throw Error("indication PNG holds palette index " + std::to_string(idx[i]));
        map[i] = static_cast<Label>(idx[i]);
    }
    return map;
}

std::string format_key_values(const std::map<std::string, std::string>& kv)
{
    std::ostringstream os;
    for (const auto& [k, v] : kv)
        os << k << " = " << v << '\n';
    return os.str();
}

std::map<std::string, std::string> parse_key_values(const std::string& text)
{
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("line " + std::to_string(lineno) + ": expected key = value");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

} // namespace io

} // namespace eyeseg
