#pragma once

#include "eyeseg/bench.hpp"
#include "eyeseg/pal.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace eyeseg {

/// Everything a corpus run depends on. Keys accepted by set():
/// k, r_th, tau, rays, kstar, th_std, eps, th_d, grid_n, rounds, e_start,
/// e_step, oracle, seed, jobs, prior_filter, oracle_refinement.
struct PipelineConfig
{
    PipelineParams params;
    std::string oracle = "mock";
    int jobs = 1;
    bool prior_filter = true;
    bool oracle_refinement = true;

    /// Throws Error on an unknown key or a malformed value. Setting `rounds`
    /// moves E_start to ceil(rounds / 4) unless `e_start` was set explicitly.
    void set(const std::string& key, const std::string& value);
    void validate() const;

    /// Stable echo of every setting, used in reports.
    std::map<std::string, std::string> to_key_values() const;

private:
    bool explicit_start_ = false;
};

/// Applies a plain-text `key = value` file on top of `base`.
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

struct CorpusRun
{
    std::vector<ImageOutcome> outcomes;
    std::optional<bench::EvalReport> report; ///< when every image has ground truth
};

/// Builds the oracle named by the config (the mock reads the corpus ground
/// truth) and runs the progressive pipeline over the corpus.
CorpusRun run_corpus(const std::vector<bench::CorpusEntry>& corpus, const PipelineConfig& config,
                     const PipelineOptions& base_options = {});

/// masks/<id>.png, indications/<id>_pii.png, indications/<id>_eye.png,
/// indications/<id>.txt, report.txt and report.json.
void write_corpus_run(const std::filesystem::path& out, const CorpusRun& run, const PipelineConfig& config);

/// Indication colours alpha-blended over the image, for inspection.
io::Bytes overlay_png(const GrayImage& image, const IndicationMap& map, double alpha = 0.6);

/// Sidecar for one indication map: origin, settings and label counts.
std::string indication_sidecar(const IndicationMap& map, const PixelPoint& origin,
                               const std::map<std::string, std::string>& settings);

struct SweepAxis
{
    std::string key;
    std::vector<std::string> values;
};

/// "key=v1,v2,..." per entry. Throws on an empty grid or malformed entry.
std::vector<SweepAxis> parse_sweep_grid(const std::vector<std::string>& entries);

struct SweepRow
{
    std::string key;
    std::string value;
    double pupil = 0.0;
    double iris = 0.0;
    double eye = 0.0;
    std::size_t failures = 0;
};

struct SweepTable
{
    SweepRow baseline;
    std::vector<SweepRow> rows;

    std::string to_text() const;
    std::string to_json() const;
};

/// One parameter varied at a time against `base`; the pupil locator runs once per image and is shared by every row.
SweepTable run_sweep(const std::vector<bench::CorpusEntry>& corpus, const PipelineConfig& base,
                     const std::vector<SweepAxis>& grid);

} // namespace eyeseg
