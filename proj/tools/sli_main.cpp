// Setlist identification command line: turns concert feature files plus a
// reference catalog into timestamped setlist documents, and evaluates
// them against ground-truth annotations.
//
// Exit codes: 0 success, 1 usage error, 2 data/processing error.

#include "sli/errors.hpp"
#include "sli/evaluation.hpp"
#include "sli/feature_io.hpp"
#include "sli/pipeline.hpp"
#include "sli/postprocess.hpp"
#include "sli/synth.hpp"
#include "sli/textio.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>

using namespace sli;
namespace fs = std::filesystem;

namespace {

int default_parallelism() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

// Settings shared by identify/train-classifier/bench.
struct CommonOpts {
    std::string backend = "qmax";
    double window_s = 120.0;
    double hop_s = 30.0;
    double min_tail_s = 30.0;
    std::size_t keep_every = 1;
    int parallelism = default_parallelism();
    double frame_rate = kDefaultFrameRateHz;
    // qmax
    int stack_size = 9;
    int stack_stride = 1;
    double kappa = 0.095;
    double gap_onset = 0.5;
    double gap_extend = 0.7;
    bool no_oti = false;
    bool linear_norm = false;
    // 2dftm
    int patch_beats = 75;
    double pseudo_beat_period = 0.5;
    // embed
    int embed_dim = 240;
    std::string embeddings;
    std::string query_embeddings;
    std::string config_file;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--backend", backend, "qmax | 2dftm | embed | embed-fallback");
        cmd->add_option("--window-s", window_s, "query window length W in seconds");
        cmd->add_option("--hop-s", hop_s, "window hop H in seconds");
        cmd->add_option("--min-tail-s", min_tail_s, "drop final windows shorter than this");
        cmd->add_option("--keep-every", keep_every, "keep every n-th window");
        cmd->add_option("--parallelism", parallelism, "worker threads");
        cmd->add_option("--frame-rate", frame_rate, "frame rate of CSV feature inputs (Hz)");
        cmd->add_option("--stack-size", stack_size, "frames stacked per alignment row");
        cmd->add_option("--stack-stride", stack_stride, "stride between stacked frames");
        cmd->add_option("--kappa", kappa, "recurrence quantile");
        cmd->add_option("--gap-onset", gap_onset, "gap penalty after a match");
        cmd->add_option("--gap-extend", gap_extend, "gap penalty after a gap");
        cmd->add_flag("--no-oti", no_oti, "disable transposition compensation");
        cmd->add_flag("--linear-norm", linear_norm,
                      "normalize alignment scores by n_ref instead of sqrt(n_ref)");
        cmd->add_option("--patch-beats", patch_beats, "beats per 2dftm patch");
        cmd->add_option("--pseudo-beat-period", pseudo_beat_period,
                        "pseudo beat period in seconds when no beat grid exists");
        cmd->add_option("--embed-dim", embed_dim, "fallback embedding dimension");
        cmd->add_option("--embeddings", embeddings, "reference embedding file (backend embed)");
        cmd->add_option("--query-embeddings", query_embeddings,
                        "per-window embedding file (backend embed)");
        cmd->add_option("--config", config_file,
                        "key=value file applied on top of command-line flags");
    }

    // The config file wins over flags: one line per setting, keys equal to
    // the long option names without the leading dashes.
    void apply_config() {
        if (config_file.empty())
            return;
        const std::map<std::string, std::function<void(std::string_view)>> setters = {
            {"backend", [&](std::string_view v) { backend = std::string(v); }},
            {"window-s", [&](std::string_view v) { window_s = parse_double(v); }},
            {"hop-s", [&](std::string_view v) { hop_s = parse_double(v); }},
            {"min-tail-s", [&](std::string_view v) { min_tail_s = parse_double(v); }},
            {"keep-every",
             [&](std::string_view v) { keep_every = static_cast<std::size_t>(parse_int(v)); }},
            {"parallelism",
             [&](std::string_view v) { parallelism = static_cast<int>(parse_int(v)); }},
            {"frame-rate", [&](std::string_view v) { frame_rate = parse_double(v); }},
            {"stack-size",
             [&](std::string_view v) { stack_size = static_cast<int>(parse_int(v)); }},
            {"stack-stride",
             [&](std::string_view v) { stack_stride = static_cast<int>(parse_int(v)); }},
            {"kappa", [&](std::string_view v) { kappa = parse_double(v); }},
            {"gap-onset", [&](std::string_view v) { gap_onset = parse_double(v); }},
            {"gap-extend", [&](std::string_view v) { gap_extend = parse_double(v); }},
            {"no-oti", [&](std::string_view v) { no_oti = v == "1" || v == "true"; }},
            {"linear-norm",
             [&](std::string_view v) { linear_norm = v == "1" || v == "true"; }},
            {"patch-beats",
             [&](std::string_view v) { patch_beats = static_cast<int>(parse_int(v)); }},
            {"pseudo-beat-period",
             [&](std::string_view v) { pseudo_beat_period = parse_double(v); }},
            {"embed-dim",
             [&](std::string_view v) { embed_dim = static_cast<int>(parse_int(v)); }},
            {"embeddings", [&](std::string_view v) { embeddings = std::string(v); }},
            {"query-embeddings",
             [&](std::string_view v) { query_embeddings = std::string(v); }},
        };
        const std::string text = read_text_file(config_file);
        std::size_t line_no = 0;
        for (const auto line : split_lines(text)) {
            ++line_no;
            if (line.empty() || line.front() == '#')
                continue;
            const std::size_t eq = line.find('=');
            if (eq == std::string_view::npos)
                throw ParseError(config_file + " line " + std::to_string(line_no) +
                                 ": expected key=value");
            const auto it = setters.find(std::string(line.substr(0, eq)));
            if (it == setters.end())
                throw ParseError(config_file + ": unknown setting '" +
                                 std::string(line.substr(0, eq)) + "'");
            it->second(line.substr(eq + 1));
        }
    }

    RunConfig to_run_config() const {
        RunConfig cfg;
        cfg.backend = parse_backend(backend);
        cfg.windowing = WindowingConfig{window_s, hop_s, min_tail_s};
        cfg.keep_every = keep_every;
        cfg.parallelism = parallelism < 1 ? 1 : parallelism;
        cfg.qmax = QmaxParams{stack_size, stack_stride, kappa,
                              gap_onset,  gap_extend,   !no_oti, !linear_norm};
        cfg.tdftm = TdftmParams{patch_beats, 1, pseudo_beat_period};
        cfg.fallback_dim = embed_dim;
        if (!embeddings.empty())
            cfg.embeddings_path = fs::path(embeddings);
        if (!query_embeddings.empty())
            cfg.query_embeddings_path = fs::path(query_embeddings);
        return cfg;
    }
};

void write_raw_csv(const std::vector<RawMatch>& matches, const fs::path& path) {
    std::ostringstream ss;
    ss << "window_index,start_s,end_s,ref_id,distance\n";
    for (const auto& m : matches)
        ss << m.window_index << ',' << format_double(m.start_s) << ','
           << format_double(m.end_s) << ',' << m.ref_id << ',' << format_double(m.distance)
           << '\n';
    write_text_file(path, ss.str());
}

std::vector<RawMatch> read_raw_csv(const fs::path& path) {
    const std::string text = read_text_file(path);
    const auto lines = split_lines(text);
    if (lines.empty() || lines[0] != "window_index,start_s,end_s,ref_id,distance")
        throw ParseError(path.string() + ": expected raw-match CSV header");
    std::vector<RawMatch> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty())
            continue;
        const auto cells = split(lines[i], ',');
        if (cells.size() != 5)
            throw ParseError(path.string() + ": row " + std::to_string(i) + " needs 5 cells");
        RawMatch m;
        m.window_index = static_cast<std::size_t>(parse_int(cells[0]));
        m.start_s = parse_double(cells[1]);
        m.end_s = parse_double(cells[2]);
        m.ref_id = std::string(cells[3]);
        m.distance = parse_double(cells[4]);
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<const ConcertEntry*> select_concerts(const CatalogManifest& manifest,
                                                 const std::string& concert) {
    std::vector<const ConcertEntry*> out;
    if (concert == "all") {
        for (const auto& c : manifest.concerts)
            out.push_back(&c);
    } else {
        const ConcertEntry* entry = manifest.find_concert(concert);
        if (entry == nullptr)
            throw UnknownConcert("concert '" + concert + "' not in manifest");
        out.push_back(entry);
    }
    return out;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"setlist identification pipeline"};
    app.require_subcommand(1);

    // ---- ingest
    auto* ingest = app.add_subcommand("ingest", "convert a feature file to binary form");
    std::string ingest_in, ingest_out, ingest_beats;
    double ingest_rate = kDefaultFrameRateHz;
    ingest->add_option("--in", ingest_in, "input feature file (.csv or binary)")->required();
    ingest->add_option("--out", ingest_out, "output binary feature file")->required();
    ingest->add_option("--frame-rate", ingest_rate, "frame rate for CSV input (Hz)");
    ingest->add_option("--beats", ingest_beats, "optional beat-times file (one per line)");

    // ---- synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    SynthConfig synth_cfg;
    int synth_concerts = 5;
    std::string synth_out;
    synth->add_option("--seed", synth_cfg.seed, "master seed");
    synth->add_option("--n-refs", synth_cfg.n_references, "playable references");
    synth->add_option("--n-distractors", synth_cfg.n_distractors, "never-played references");
    synth->add_option("--n-concerts", synth_concerts, "concerts to generate");
    synth->add_option("--ref-dur-min", synth_cfg.ref_duration_range_s.first, "seconds");
    synth->add_option("--ref-dur-max", synth_cfg.ref_duration_range_s.second, "seconds");
    synth->add_option("--songs-min", synth_cfg.songs_per_concert_range.first, "per concert");
    synth->add_option("--songs-max", synth_cfg.songs_per_concert_range.second, "per concert");
    synth->add_option("--gap-min", synth_cfg.gap_range_s.first, "seconds");
    synth->add_option("--gap-max", synth_cfg.gap_range_s.second, "seconds");
    synth->add_option("--transpose-prob", synth_cfg.transpose_prob, "per song");
    synth->add_option("--stretch-prob", synth_cfg.stretch_prob, "per song");
    synth->add_option("--truncate-prob", synth_cfg.truncate_prob, "per song");
    synth->add_option("--noise-level", synth_cfg.noise_level, "0..1");
    synth->add_option("--frame-rate", synth_cfg.frame_rate_hz, "Hz");
    synth->add_option("--out-dir", synth_out, "output directory")->required();

    // ---- identify
    auto* identify_cmd =
        app.add_subcommand("identify", "produce setlist documents for concerts");
    CommonOpts identify_opts;
    std::string identify_manifest, identify_concert = "all", identify_out = "results";
    std::string identify_classifier;
    bool dump_raw = false;
    identify_cmd->add_option("--manifest", identify_manifest, "catalog manifest")->required();
    identify_cmd->add_option("--concert", identify_concert, "concert id or 'all'");
    identify_cmd->add_option("--out-dir", identify_out, "directory for setlist documents");
    identify_cmd->add_option("--classifier", identify_classifier,
                             "classifier file for match filtering");
    identify_cmd->add_flag("--dump-raw", dump_raw, "also write per-window matches as CSV");
    std::string identify_from_raw;
    identify_cmd->add_option("--from-raw", identify_from_raw,
                             "skip retrieval and consolidate a dumped raw-match CSV "
                             "(requires --concert)");
    identify_opts.add_flags(identify_cmd);

    // ---- train-classifier
    auto* train_cmd = app.add_subcommand(
        "train-classifier", "train the match filter on concerts with annotations");
    CommonOpts train_opts;
    std::string train_manifest, train_out = "classifier.txt";
    std::uint64_t train_seed = 1;
    train_cmd->add_option("--manifest", train_manifest, "catalog manifest")->required();
    train_cmd->add_option("--out", train_out, "classifier output file");
    train_cmd->add_option("--seed", train_seed, "training shuffle seed");
    train_opts.add_flags(train_cmd);

    // ---- evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score setlist documents");
    std::string eval_manifest, eval_results = "results", eval_out;
    eval_cmd->add_option("--manifest", eval_manifest, "catalog manifest")->required();
    eval_cmd->add_option("--results-dir", eval_results, "directory of setlist documents");
    eval_cmd->add_option("--out-dir", eval_out, "report directory (default: results dir)");

    // ---- bench
    auto* bench_cmd = app.add_subcommand("bench", "time backends on one concert");
    CommonOpts bench_opts;
    std::string bench_manifest, bench_concert, bench_backends = "qmax,2dftm,embed-fallback";
    std::string bench_out = "bench.csv";
    int bench_repeats = 3;
    bench_cmd->add_option("--manifest", bench_manifest, "catalog manifest")->required();
    bench_cmd->add_option("--concert", bench_concert, "concert id")->required();
    bench_cmd->add_option("--backends", bench_backends, "comma-separated backend list");
    bench_cmd->add_option("--repeats", bench_repeats, "timing repetitions (median reported)");
    bench_cmd->add_option("--out", bench_out, "CSV output path");
    bench_opts.add_flags(bench_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1; // usage error
    }

    if (ingest->parsed()) {
        PcpMatrix pcp;
        std::optional<BeatGrid> beats;
        if (ingest_in.size() > 4 && ingest_in.substr(ingest_in.size() - 4) == ".csv") {
            pcp = parse_feature_csv(ingest_in, ingest_rate);
        } else {
            FeatureFile f = parse_feature_file(ingest_in);
            pcp = std::move(f.pcp);
            beats = std::move(f.beats);
        }
        if (!ingest_beats.empty()) {
            BeatGrid grid;
            for (const auto line : split_lines(read_text_file(ingest_beats)))
                if (!line.empty())
                    grid.beat_times_s.push_back(parse_double(line));
            beats = std::move(grid);
        }
        FeatureMeta meta{fs::path(ingest_out).stem().string(), pcp.duration_s(),
                         SourceKind::reference};
        write_feature_file(pcp, meta, beats, ingest_out);
        std::printf("wrote %s (%zu frames @ %s Hz)\n", ingest_out.c_str(), pcp.n_frames,
                    format_double(pcp.frame_rate_hz).c_str());
        return 0;
    }

    if (synth->parsed()) {
        synth_dataset(synth_cfg, synth_concerts, synth_out);
        std::printf("wrote dataset with %d references (+%d distractors), %d concerts to %s\n",
                    synth_cfg.n_references, synth_cfg.n_distractors, synth_concerts,
                    synth_out.c_str());
        return 0;
    }

    if (identify_cmd->parsed()) {
        identify_opts.apply_config();
        RunConfig cfg = identify_opts.to_run_config();
        if (!identify_classifier.empty())
            cfg.classifier_path = fs::path(identify_classifier);
        const CatalogManifest manifest = load_manifest(identify_manifest);
        const ReferenceSet refs = load_references(manifest);
        fs::create_directories(identify_out);
        if (!identify_from_raw.empty()) {
            if (identify_concert == "all")
                throw ParseError("--from-raw needs a single --concert id");
            const ConcertEntry* entry = manifest.find_concert(identify_concert);
            if (entry == nullptr)
                throw UnknownConcert("concert '" + identify_concert + "' not in manifest");
            const PcpMatrix concert = parse_feature_file(entry->feature_path).pcp;
            const auto matches = read_raw_csv(identify_from_raw);
            const SetlistDocument doc = document_from_matches(
                matches, entry->concert_id, concert.frame_rate_hz, refs, cfg);
            const fs::path doc_path =
                fs::path(identify_out) / (entry->concert_id + ".setlist");
            write_setlist_document(doc, doc_path);
            std::printf("%s: %zu entries -> %s\n", entry->concert_id.c_str(),
                        doc.entries.size(), doc_path.string().c_str());
            return 0;
        }
        for (const ConcertEntry* entry : select_concerts(manifest, identify_concert)) {
            const FeatureFile feature = parse_feature_file(entry->feature_path);
            const PcpMatrix& concert = feature.pcp;
            std::vector<RawMatch> raw;
            const SetlistDocument doc =
                identify(concert, entry->concert_id, refs, cfg, dump_raw ? &raw : nullptr,
                         feature.beats ? &*feature.beats : nullptr);
            const fs::path doc_path =
                fs::path(identify_out) / (entry->concert_id + ".setlist");
            write_setlist_document(doc, doc_path);
            if (dump_raw)
                write_raw_csv(raw, fs::path(identify_out) / (entry->concert_id + ".raw.csv"));
            std::printf("%s: %zu entries -> %s\n", entry->concert_id.c_str(),
                        doc.entries.size(), doc_path.string().c_str());
        }
        return 0;
    }

    if (train_cmd->parsed()) {
        train_opts.apply_config();
        const RunConfig cfg = train_opts.to_run_config();
        const CatalogManifest manifest = load_manifest(train_manifest);
        const ReferenceSet refs = load_references(manifest);
        std::vector<LabeledPoint> samples;
        for (const auto& entry : manifest.concerts) {
            const PcpMatrix concert = parse_feature_file(entry.feature_path).pcp;
            const SetlistDocument doc = identify(concert, entry.concert_id, refs, cfg);
            const auto annotations = load_annotations(entry.annotation_path);
            for (const auto& [seg, correct] :
                 label_segments(all_segments(doc), annotations))
                samples.push_back(
                    LabeledPoint{seg.distance, seg.end_s - seg.start_s, correct});
        }
        const std::string id = train_opts.backend + "-" +
                               format_double(train_opts.window_s) + "-" +
                               format_double(train_opts.hop_s);
        const MatchClassifier clf = train_classifier(samples, train_seed, id);
        save_classifier(clf, train_out);
        std::printf("trained '%s' on %zu segments -> %s\n", id.c_str(), samples.size(),
                    train_out.c_str());
        return 0;
    }

    if (eval_cmd->parsed()) {
        const CatalogManifest manifest = load_manifest(eval_manifest);
        const fs::path out_dir = eval_out.empty() ? fs::path(eval_results) : fs::path(eval_out);
        evaluate_results(manifest, eval_results, out_dir);
        std::printf("%s\n", read_text_file(out_dir / "report.txt").c_str());
        return 0;
    }

    if (bench_cmd->parsed()) {
        bench_opts.apply_config();
        const CatalogManifest manifest = load_manifest(bench_manifest);
        const ReferenceSet refs = load_references(manifest);
        const ConcertEntry* entry = manifest.find_concert(bench_concert);
        if (entry == nullptr)
            throw UnknownConcert("concert '" + bench_concert + "' not in manifest");
        const FeatureFile feature = parse_feature_file(entry->feature_path);
        std::vector<RunConfig> configs;
        for (const auto name : split(bench_backends, ',')) {
            CommonOpts opts = bench_opts;
            opts.backend = std::string(name);
            configs.push_back(opts.to_run_config());
        }
        const auto rows = bench(feature.pcp, refs, configs, bench_repeats,
                                feature.beats ? &*feature.beats : nullptr);
        const std::string csv = bench_csv(rows);
        write_text_file(bench_out, csv);
        std::printf("%s", csv.c_str());
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
