#include "eyeseg/bench.hpp"
#include "eyeseg/runner.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace eyeseg;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kFatal = 2;

// Command-line overrides, applied on top of --config in a fixed order.
struct Overrides
{
    std::string config;
    std::vector<std::pair<std::string, std::string>> values;
    std::map<std::string, std::string> raw;

    void add(CLI::App* app)
    {
        app->add_option("--config", config, "plain-text key = value settings file");
        const std::pair<const char*, const char*> flags[] = {
            {"--k", "k"},           {"--tau", "tau"},         {"--kstar", "kstar"},     {"--th-std", "th_std"},
            {"--th-d", "th_d"},     {"--eps", "eps"},         {"--grid-n", "grid_n"},   {"--rays", "rays"},
            {"--rounds", "rounds"}, {"--e-start", "e_start"}, {"--e-step", "e_step"},   {"--oracle", "oracle"},
            {"--seed", "seed"},     {"--jobs", "jobs"},       {"--r-th", "r_th"},
        };
        for (const auto& [flag, key] : flags)
            app->add_option(flag, raw[key]);
    }

    PipelineConfig resolve() const
    {
        PipelineConfig cfg;
        if (!config.empty())
            cfg = load_config(config, cfg);
        // e_start after rounds so an explicit start survives the rounds default.
        static const char* order[] = {"k",    "r_th",   "tau",    "rays",   "kstar",   "th_std", "eps",  "th_d",
                                      "grid_n", "rounds", "e_start", "e_step", "oracle", "seed",   "jobs"};
        for (const char* key : order)
            if (const auto it = raw.find(key); it != raw.end() && !it->second.empty())
                cfg.set(key, it->second);
        cfg.validate();
        return cfg;
    }
};

std::vector<fs::path> expand_images(const std::vector<std::string>& args)
{
    std::vector<fs::path> out;
    for (const auto& a : args) {
        if (fs::is_directory(a)) {
            std::vector<fs::path> dir;
            for (const auto& f : fs::directory_iterator(a))
                if (f.is_regular_file() && (f.path().extension() == ".png" || f.path().extension() == ".pgm"))
                    dir.push_back(f.path());
            std::sort(dir.begin(), dir.end());
            out.insert(out.end(), dir.begin(), dir.end());
        } else {
            out.emplace_back(a);
        }
    }
    return out;
}

PixelPoint parse_origin(const std::string& s)
{
    const auto comma = s.find(',');
    if (comma == std::string::npos)
        throw Error("--origin expects x,y");
    try {
        return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
    } catch (const std::exception&) {
        throw Error("--origin expects x,y");
    }
}

int cmd_synth(const std::string& profile, int count, std::uint64_t seed, const fs::path& out)
{
    bench::write_corpus(out, bench::generate_corpus(bench::parse_profile(profile), count, seed));
    std::cout << "wrote " << count << " " << profile << " images to " << out.string() << "\n";
    return kOk;
}

int cmd_indicate(const std::vector<std::string>& images, const PipelineConfig& cfg, const std::string& origin_arg,
                 const fs::path& out)
{
    fs::create_directories(out);
    const std::optional<PixelPoint> forced =
        origin_arg.empty() ? std::nullopt : std::optional<PixelPoint>(parse_origin(origin_arg));
    const auto settings = cfg.to_key_values();
    const auto paths = expand_images(images);
    if (paths.empty())
        throw Error("no input images");
    int status = kOk;
    for (const auto& path : paths) {
        const std::string id = path.stem().string();
        const GrayImage image =
            io::read_image(path, [&](const std::string& w) { std::cerr << "warning: " << id << ": " << w << "\n"; });
        IndicationMap pii_map(image.width(), image.height(), Label::Ignore);
        IndicationMap eye_map(image.width(), image.height(), Label::Ignore);
        PixelPoint origin;
        try {
            origin = forced ? *forced : locate_pupil_point(image, cfg.params.locator);
            const PiiResult pii = generate_pupil_iris_indications(image, origin, cfg.params.pii);
            pii_map = pii.map;
            if (pii.labeled_rays() == 0) {
                std::cerr << "warning: " << id << ": no ray produced pupil/iris labels\n";
                status = kPartial;
            } else {
                const PupilIrisFit fit = densify_pupil_iris(pii.map, pii.fan);
                const Mask p = rasterize_ellipse(fit.pupil, image.width(), image.height());
                const Mask ir = rasterize_ellipse(fit.iris, image.width(), image.height());
                const MaskSet region{p, mask_difference(ir, p), Mask(image.width(), image.height(), 0)};
                eye_map = initial_eye_indication(gstd_map(sobel_gradients(image), cfg.params.ei), region, pii.fan,
                                                 cfg.params.ei.smooth_fraction);
            }
        } catch (const Error& e) {
            std::cerr << "warning: " << id << ": " << e.what() << "\n";
            status = kPartial;
        }
        io::write_file_atomic(out / (id + "_pii.png"), io::encode_indication_png(pii_map));
        io::write_file_atomic(out / (id + "_eye.png"), io::encode_indication_png(eye_map));
        io::write_file_atomic(out / (id + "_pii_overlay.png"), overlay_png(image, pii_map));
        io::write_file_atomic(out / (id + "_eye_overlay.png"), overlay_png(image, eye_map));
        io::write_text_atomic(out / (id + ".txt"), indication_sidecar(pii_map, origin, settings));
    }
    return status;
}

int cmd_pipeline(const fs::path& corpus_dir, const PipelineConfig& cfg, const fs::path& out)
{
    const auto corpus = bench::read_corpus(corpus_dir);
    const CorpusRun run = run_corpus(corpus, cfg);
    write_corpus_run(out, run, cfg);
    int status = kOk;
    for (const auto& o : run.outcomes) {
        if (o.failed) {
            std::cerr << "image " << o.id << " failed: " << o.error << "\n";
            status = kPartial;
        } else if (!o.oracle_note.empty()) {
            std::cerr << "image " << o.id << ": oracle fallback: " << o.oracle_note << "\n";
            status = kPartial;
        }
    }
    if (run.report)
        std::cout << run.report->to_text();
    else
        std::cout << "masks written to " << (out / "masks").string() << " (no ground truth, no report)\n";
    return status;
}

int cmd_sweep(const fs::path& corpus_dir, const PipelineConfig& cfg, const std::vector<std::string>& grid_args,
              const fs::path& out)
{
    const auto grid = parse_sweep_grid(grid_args);
    const auto corpus = bench::read_corpus(corpus_dir);
    const SweepTable table = run_sweep(corpus, cfg, grid);
    fs::create_directories(out);
    io::write_text_atomic(out / "sweep.txt", table.to_text());
    io::write_text_atomic(out / "sweep.json", table.to_json());
    std::cout << table.to_text();
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sparse pupil / iris / eye indications and their densification for near-infrared eye images"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "render a synthetic corpus");
    std::string profile = "clean";
    int count = 50;
    std::uint64_t synth_seed = 7;
    std::string synth_out;
    synth->add_option("--profile", profile, "clean, occluded or noisy")->capture_default_str();
    synth->add_option("--count", count)->capture_default_str()->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed)->capture_default_str();
    synth->add_option("--out", synth_out)->required();

    auto* indicate = app.add_subcommand("indicate", "write pupil/iris and initial eye indications");
    std::vector<std::string> images;
    std::string origin;
    std::string indicate_out;
    Overrides indicate_cfg;
    indicate->add_option("images", images, "image files or directories")->required();
    indicate->add_option("--origin", origin, "x,y ray origin; skips the pupil locator");
    indicate->add_option("--out", indicate_out)->required();
    indicate_cfg.add(indicate);

    auto* pipeline = app.add_subcommand("pipeline", "run the progressive pipeline over a corpus");
    std::string corpus;
    std::string pipeline_out;
    bool no_prior = false;
    bool initial_only = false;
    Overrides pipeline_cfg;
    pipeline->add_option("corpus", corpus, "directory with images/ (and masks/)")->required();
    pipeline->add_option("--out", pipeline_out)->required();
    pipeline->add_flag("--no-prior-filter", no_prior, "keep contradicted pupil/iris labels");
    pipeline->add_flag("--initial-only", initial_only, "skip the oracle; eye from initial indications");
    pipeline_cfg.add(pipeline);

    auto* sweep = app.add_subcommand("sweep", "vary one parameter at a time and tabulate mean IoU");
    std::string sweep_corpus;
    std::string sweep_out;
    std::vector<std::string> grid;
    Overrides sweep_cfg;
    sweep->add_option("corpus", sweep_corpus)->required();
    sweep->add_option("--out", sweep_out)->required();
    sweep->add_option("--grid", grid, "key=v1,v2,... (repeatable)");
    sweep_cfg.add(sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kFatal;
    }

    try {
        if (synth->parsed())
            return cmd_synth(profile, count, synth_seed, synth_out);
        if (indicate->parsed())
            return cmd_indicate(images, indicate_cfg.resolve(), origin, indicate_out);
        if (pipeline->parsed()) {
            PipelineConfig cfg = pipeline_cfg.resolve();
            if (no_prior)
                cfg.prior_filter = false;
            if (initial_only)
                cfg.oracle_refinement = false;
            return cmd_pipeline(corpus, cfg, pipeline_out);
        }
        if (sweep->parsed())
            return cmd_sweep(sweep_corpus, sweep_cfg.resolve(), grid, sweep_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFatal;
    }
    return kFatal;
}
