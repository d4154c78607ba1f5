#include "eyeseg/runner.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <sstream>

namespace eyeseg {

namespace {

int parse_int(const std::string& key, const std::string& v)
{
    int out = 0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || end != v.data() + v.size())
        throw Error("'" + key + "' expects an integer, got '" + v + "'");
    return out;
}

double parse_real(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used == v.size())
            return out;
    } catch (const std::exception&) {
    }
    throw Error("'" + key + "' expects a number, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "1" || v == "true" || v == "on" || v == "yes")
        return true;
    if (v == "0" || v == "false" || v == "off" || v == "no")
        return false;
    throw Error("'" + key + "' expects true or false, got '" + v + "'");
}

std::string real(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace

void PipelineConfig::set(const std::string& key, const std::string& value)
{
    auto& p = params;
    if (key == "k")
        p.pii.window_side = parse_int(key, value);
    else if (key == "r_th")
        p.pii.agreement = parse_real(key, value);
    else if (key == "tau")
        p.pii.pulse_width = parse_int(key, value);
    else if (key == "rays")
        p.pii.ray_count = parse_int(key, value);
    else if (key == "kstar")
        p.ei.window_side = parse_int(key, value);
    else if (key == "th_std")
        p.ei.gstd_threshold = parse_real(key, value);
    else if (key == "eps")
        p.ei.neighborhood = parse_int(key, value);
    else if (key == "th_d")
        p.ei.derivative_threshold = parse_real(key, value);
    else if (key == "grid_n")
        p.ei.grid = parse_int(key, value);
    else if (key == "rounds") {
        p.schedule.rounds = parse_int(key, value);
        if (!explicit_start_)
            p.schedule.start = Schedule::for_rounds(p.schedule.rounds).start;
    } else if (key == "e_start") {
        p.schedule.start = parse_int(key, value);
        explicit_start_ = true;
    } else if (key == "e_step")
        p.schedule.step = parse_int(key, value);
    else if (key == "oracle")
        oracle = value;
    else if (key == "seed") {
        std::uint64_t s = 0;
        const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
        if (ec != std::errc() || end != value.data() + value.size())
            throw Error("'seed' expects an unsigned integer, got '" + value + "'");
        p.seed = s;
    } else if (key == "jobs")
        jobs = parse_int(key, value);
    else if (key == "prior_filter")
        prior_filter = parse_bool(key, value);
    else if (key == "oracle_refinement")
        oracle_refinement = parse_bool(key, value);
    else
        throw Error("unknown setting '" + key + "'");
}

void PipelineConfig::validate() const
{
    params.pii.validate();
    params.ei.validate();
    params.schedule.validate();
    if (jobs < 1)
        throw Error("jobs must be >= 1");
}

std::map<std::string, std::string> PipelineConfig::to_key_values() const
{
    const auto& p = params;
    return {
        {"k", std::to_string(p.pii.window_side)},
        {"r_th", real(p.pii.agreement)},
        {"tau", std::to_string(p.pii.pulse_width)},
        {"rays", std::to_string(p.pii.ray_count)},
        {"kstar", std::to_string(p.ei.window_side)},
        {"th_std", real(p.ei.gstd_threshold)},
        {"eps", std::to_string(p.ei.neighborhood)},
        {"th_d", real(p.ei.derivative_threshold)},
        {"grid_n", std::to_string(p.ei.grid)},
        {"rounds", std::to_string(p.schedule.rounds)},
        {"e_start", std::to_string(p.schedule.start)},
        {"e_step", std::to_string(p.schedule.step)},
        {"oracle", oracle},
        {"seed", std::to_string(p.seed)},
        {"prior_filter", prior_filter ? "true" : "false"},
        {"oracle_refinement", oracle_refinement ? "true" : "false"},
    };
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base)
{
    const io::Bytes bytes = io::read_file(path);
    for (const auto& [k, v] : io::parse_key_values(std::string(bytes.begin(), bytes.end())))
        base.set(k, v);
    return base;
}

CorpusRun run_corpus(const std::vector<bench::CorpusEntry>& corpus, const PipelineConfig& config,
                     const PipelineOptions& base_options)
{
    config.validate();
    if (corpus.empty())
        throw Error("empty corpus");
    bool all_truth = true;
    std::map<std::string, Mask> truth;
    std::vector<PipelineInput> inputs;
    for (const auto& e : corpus) {
        inputs.push_back({e.id, e.image});
        if (e.truth)
            truth[e.id] = e.truth->eye;
        else
            all_truth = false;
    }

    std::unique_ptr<SegmentationOracle> oracle;
    if (config.oracle_refinement) {
        if (config.oracle == "mock" && !all_truth)
            throw Error("the mock oracle needs ground-truth masks for every image");
        oracle = make_oracle(config.oracle, std::move(truth), config.params.seed);
    }

    PipelineOptions options = base_options;
    options.prior_filter = config.prior_filter;
    options.oracle_refinement = config.oracle_refinement;
    options.jobs = config.jobs;

    CorpusRun run;
    run.outcomes = run_progressive_pipeline(inputs, config.params, oracle.get(), options);
    if (all_truth) {
        std::vector<bench::Prediction> preds;
        std::vector<std::pair<std::string, MaskSet>> gt;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            const auto& o = run.outcomes[i];
            std::string note = o.failed ? o.error : o.oracle_note;
            if (!o.failed && !o.oracle_note.empty())
                note = "oracle fallback: " + o.oracle_note;
            preds.push_back({o.id, o.failed ? std::nullopt : std::optional<MaskSet>(o.masks), note});
            gt.emplace_back(corpus[i].id, *corpus[i].truth);
        }
        run.report = bench::evaluate(preds, gt, config.to_key_values());
    }
    return run;
}

io::Bytes overlay_png(const GrayImage& image, const IndicationMap& map, double alpha)
{
    require_same_shape(image, map, "overlay");
    const auto& palette = io::indication_palette();
    std::vector<io::Rgb> px(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        const auto g = static_cast<std::uint8_t>(std::clamp(std::round(image[i]), 0.0, 255.0));
        if (map[i] == Label::Ignore) {
            px[i] = {g, g, g};
            continue;
        }
        const io::Rgb& c = palette[static_cast<std::size_t>(map[i])];
        for (int k = 0; k < 3; ++k)
            px[i][k] = static_cast<std::uint8_t>(std::lround(alpha * c[k] + (1.0 - alpha) * g));
    }
    return io::encode_rgb_png(image.width(), image.height(), px);
}

std::string indication_sidecar(const IndicationMap& map, const PixelPoint& origin,
                               const std::map<std::string, std::string>& settings)
{
    std::map<std::string, std::string> kv = settings;
    kv["origin.x"] = real(origin.x);
    kv["origin.y"] = real(origin.y);
    kv["width"] = std::to_string(map.width());
    kv["height"] = std::to_string(map.height());
    for (int l = 0; l < kLabelCount; ++l)
        kv[std::string("count.") + label_name(static_cast<Label>(l))] =
            std::to_string(count_label(map, static_cast<Label>(l)));
    return io::format_key_values(kv);
}

void write_corpus_run(const std::filesystem::path& out, const CorpusRun& run, const PipelineConfig& config)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    for (const char* sub : {"masks", "indications"}) {
        fs::create_directories(out / sub, ec);
        if (ec)
            throw Error("cannot create " + (out / sub).string() + ": " + ec.message());
    }
    const auto settings = config.to_key_values();
    for (const auto& o : run.outcomes) {
        io::write_file_atomic(out / "masks" / (o.id + ".png"), io::encode_mask_set_png(o.masks));
        if (o.failed)
            continue;
        io::write_file_atomic(out / "indications" / (o.id + "_pii.png"), io::encode_indication_png(o.pupil_iris));
        io::write_file_atomic(out / "indications" / (o.id + "_eye.png"), io::encode_indication_png(o.eye));
        io::write_text_atomic(out / "indications" / (o.id + ".txt"), indication_sidecar(o.pupil_iris, o.origin, settings));
    }
    if (run.report) {
        io::write_text_atomic(out / "report.txt", run.report->to_text());
        io::write_text_atomic(out / "report.json", run.report->to_json());
    }
}

std::vector<SweepAxis> parse_sweep_grid(const std::vector<std::string>& entries)
{
    std::vector<SweepAxis> grid;
    for (const auto& e : entries) {
        const auto eq = e.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == e.size())
            throw Error("sweep entry '" + e + "' is not key=v1,v2,...");
        SweepAxis axis{e.substr(0, eq), {}};
        std::stringstream ss(e.substr(eq + 1));
        std::string v;
        while (std::getline(ss, v, ','))
            if (!v.empty())
                axis.values.push_back(v);
        if (axis.values.empty())
            throw Error("sweep entry '" + e + "' has no values");
        PipelineConfig probe;
        for (const auto& value : axis.values)
            probe.set(axis.key, value);
        grid.push_back(std::move(axis));
    }
    if (grid.empty())
        throw Error("empty sweep grid");
    return grid;
}

namespace {

SweepRow row_from(const std::string& key, const std::string& value, const bench::EvalReport& r)
{
    return SweepRow{key, value, r.mean_pupil, r.mean_iris, r.mean_eye, r.failures};
}

} // namespace

SweepTable run_sweep(const std::vector<bench::CorpusEntry>& corpus, const PipelineConfig& base,
                     const std::vector<SweepAxis>& grid)
{
    if (grid.empty())
        throw Error("empty sweep grid");
    for (const auto& e : corpus)
        if (!e.truth)
            throw Error("sweep needs ground truth for every image ('" + e.id + "' has none)");

    PipelineOptions options;
    options.origins.resize(corpus.size());
    parallel_for(corpus.size(), base.jobs, [&](std::size_t i) {
        try {
            options.origins[i] = locate_pupil_point(corpus[i].image, base.params.locator);
        } catch (const NoPupilFound&) {
        }
    });

    SweepTable table;
    const CorpusRun baseline = run_corpus(corpus, base, options);
    table.baseline = row_from("default", "-", *baseline.report);
    for (const auto& axis : grid) {
        for (const auto& value : axis.values) {
            PipelineConfig cfg = base;
            cfg.set(axis.key, value);
            const CorpusRun run = run_corpus(corpus, cfg, options);
            table.rows.push_back(row_from(axis.key, value, *run.report));
        }
    }
    return table;
}

std::string SweepTable::to_text() const
{
    std::ostringstream o;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-10s %-8s %8s %8s %8s %9s %9s %9s %s\n", "param", "value", "pupil", "iris", "eye",
                  "d_pupil", "d_iris", "d_eye", "failures");
    o << buf;
    const auto line = [&](const SweepRow& r) {
        std::snprintf(buf, sizeof buf, "%-10s %-8s %8.4f %8.4f %8.4f %+9.4f %+9.4f %+9.4f %zu\n", r.key.c_str(),
                      r.value.c_str(), r.pupil, r.iris, r.eye, r.pupil - baseline.pupil, r.iris - baseline.iris,
                      r.eye - baseline.eye, r.failures);
        o << buf;
    };
    line(baseline);
    for (const auto& r : rows)
        line(r);
    return o.str();
}

std::string SweepTable::to_json() const
{
    const auto row = [](const SweepRow& r) {
        return nlohmann::json{{"param", r.key}, {"value", r.value},   {"pupil", r.pupil},
                              {"iris", r.iris}, {"eye", r.eye}, {"failures", r.failures}};
    };
    nlohmann::json j;
    j["baseline"] = row(baseline);
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows)
        j["rows"].push_back(row(r));
    return j.dump(2) + "\n";
}

} // namespace eyeseg
