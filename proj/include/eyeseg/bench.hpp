#pragma once

#include "eyeseg/densify.hpp"
#include "eyeseg/mask_set.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace eyeseg::bench {

enum class Profile
{
    Clean,
    Occluded,
    Noisy,
};

const char* profile_name(Profile p);
Profile parse_profile(const std::string& name);

/// Eye opening bounded by two parabolas meeting at the corners
/// (cx -+ half_width, cy): upper lid y = cy - upper * (1 - u^2),
/// lower lid y = cy + lower * (1 - u^2), u = (x - cx) / half_width.
struct Eyelids
{
    double cx = 320.0;
    double cy = 200.0;
    double half_width = 220.0;
    double upper = 120.0;
    double lower = 110.0;

    double upper_y(double x) const;
    double lower_y(double x) const;
    /// Strictly between the lids.
    bool contains(double x, double y) const;
};

struct EyeSceneSpec
{
    std::uint64_t seed = 0;
    int width = 640;
    int height = 400;
    EllipseParams pupil{{320.0, 200.0}, 30.0, 30.0, 0.0};
    EllipseParams iris{{320.0, 200.0}, 85.0, 85.0, 0.0};
    Eyelids lids;

    double pupil_level = 25.0;
    double iris_level = 90.0;
    double sclera_level = 180.0;
    double skin_level = 135.0;

    double pupil_blur = 3.0;  ///< edge sigma, px; 0 renders hard edges
    double limbus_blur = 4.0;
    double lid_blur = 1.5;
    double iris_texture = 5.0; ///< amplitude of the angular iris pattern
    double skin_texture = 4.0;
    double lid_margin = 25.0;  ///< darkening of the skin along the lid edge

    std::vector<PixelPoint> glints;
    double glint_radius = 3.0;
    double glint_level = 250.0;

    double noise_sigma = 1.2;

    /// Pupil inside the iris, levels ordered pupil < iris < sclera by >= 20.
    void validate() const;

    std::map<std::string, std::string> to_key_values() const;
    static EyeSceneSpec from_key_values(const std::map<std::string, std::string>& kv);
};

/// Seeded scene for one corpus image of a profile.
EyeSceneSpec sample_scene(Profile profile, std::uint64_t seed);

struct RenderedEye
{
    GrayImage image; ///< integer levels in [0, 255]
    MaskSet truth;   ///< visible parts only: iris excludes the pupil, eye is the lid opening
};

RenderedEye render_eye(const EyeSceneSpec& spec);

/// Fraction of iris-ellipse pixels hidden by the lids.
double iris_occlusion(const EyeSceneSpec& spec);

/// |a & b| / |a | b|; 1 when both are empty.
double iou(const Mask& pred, const Mask& gt);

struct CorpusEntry
{
    std::string id;
    GrayImage image;
    std::optional<MaskSet> truth;
    std::optional<EyeSceneSpec> spec;
};

/// Image i of a profile uses a seed derived from (seed, profile, i); ids are "0000", "0001", ...
std::vector<CorpusEntry> generate_corpus(Profile profile, int count, std::uint64_t seed);

/// images/NNNN.png, masks/NNNN.png, spec/NNNN.
void write_corpus(const std::filesystem::path& dir, const std::vector<CorpusEntry>& entries);

/// Every images/*.png in id order; masks and specs are picked up when present.
std::vector<CorpusEntry> read_corpus(const std::filesystem::path& dir);

struct ImageScore
{
    std::string id;
    double pupil = 0.0;
    double iris = 0.0;
    double eye = 0.0;
    bool failed = false;
    std::string note;
};

struct Prediction
{
    std::string id;
    std::optional<MaskSet> masks; ///< empty for a failed image
    std::string note;
};

struct EvalReport
{
    std::vector<ImageScore> images;
    double mean_pupil = 0.0;
    double mean_iris = 0.0;
    double mean_eye = 0.0;
    std::size_t failures = 0;
    std::map<std::string, std::string> params;

    std::string to_text() const;
    std::string to_json() const;
};

/// Failed images score 0 on every class. Ids must match pairwise.
EvalReport evaluate(const std::vector<Prediction>& preds, const std::vector<std::pair<std::string, MaskSet>>& truth,
                    std::map<std::string, std::string> params = {});

} // namespace eyeseg::bench
