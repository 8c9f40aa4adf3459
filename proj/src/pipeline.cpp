#include "sli/pipeline.hpp"

#include "sli/errors.hpp"
#include "sli/evaluation.hpp"
#include "sli/feature_io.hpp"
#include "sli/textio.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sli {

std::string to_string(BackendKind k) {
    switch (k) {
    case BackendKind::qmax: return "qmax";
    case BackendKind::tdftm: return "2dftm";
    case BackendKind::embed: return "embed";
    case BackendKind::embed_fallback: return "embed-fallback";
    }
    return "qmax";
}

BackendKind parse_backend(std::string_view name) {
    if (name == "qmax") return BackendKind::qmax;
    if (name == "2dftm") return BackendKind::tdftm;
    if (name == "embed") return BackendKind::embed;
    if (name == "embed-fallback") return BackendKind::embed_fallback;
    throw UnknownEnumValue("backend '" + std::string(name) +
                           "' (valid: qmax, 2dftm, embed, embed-fallback)");
}

ReferenceSet load_references(const CatalogManifest& manifest) {
    ReferenceSet out;
    out.entries = manifest.references; // already sorted by track_id
    out.pcps.resize(out.entries.size());
    out.beats.resize(out.entries.size());
    for (std::size_t i = 0; i < out.entries.size(); ++i) {
        FeatureFile f = parse_feature_file(out.entries[i].feature_path);
        out.pcps[i] = std::move(f.pcp);
        out.beats[i] = std::move(f.beats);
    }
    return out;
}

namespace {

class QmaxBackend final : public Backend {
public:
    explicit QmaxBackend(const QmaxParams& params) : params_(params) {}

    void prepare(const ReferenceSet& refs, int parallelism) override {
        (void)parallelism;
        prepared_.assign(refs.pcps.size(), PreparedRef{});
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(parallelism)
#endif
        for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(refs.pcps.size()); ++r) {
            const std::size_t i = static_cast<std::size_t>(r);
            prepared_[i] = prepare_reference(view_of(refs.pcps[i]));
        }
    }

    std::vector<double> window_distances(PcpView window, std::size_t /*window_index*/,
                                         const BeatGrid* /*window_beats*/) const override {
        std::vector<double> out(prepared_.size());
        const auto window_mean = mean_profile(window);
        thread_local QmaxWorkspace ws;
        for (std::size_t r = 0; r < prepared_.size(); ++r)
            out[r] = qmax_distance(window, window_mean, prepared_[r], params_, ws);
        return out;
    }

private:
    QmaxParams params_;
    std::vector<PreparedRef> prepared_;
};

class TdftmBackend final : public Backend {
public:
    explicit TdftmBackend(const TdftmParams& params) : params_(params) {}

    void prepare(const ReferenceSet& refs, int parallelism) override {
        (void)parallelism;
        ref_embeddings_.assign(refs.pcps.size(), TdftmEmbedding{});
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(parallelism)
#endif
        for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(refs.pcps.size()); ++r) {
            const std::size_t i = static_cast<std::size_t>(r);
            const BeatGrid* beats = refs.beats[i].has_value() ? &*refs.beats[i] : nullptr;
            const RealMatrix beat_pcp = beat_synchronize(view_of(refs.pcps[i]), beats, params_);
            ref_embeddings_[i] = tdftm_embed(beat_pcp, params_);
        }
    }

    std::vector<double> window_distances(PcpView window, std::size_t /*window_index*/,
                                         const BeatGrid* window_beats) const override {
        const RealMatrix beat_pcp = beat_synchronize(window, window_beats, params_);
        const TdftmEmbedding q = tdftm_embed(beat_pcp, params_);
        std::vector<double> out(ref_embeddings_.size());
        for (std::size_t r = 0; r < ref_embeddings_.size(); ++r)
            out[r] = tdftm_distance(q, ref_embeddings_[r]);
        return out;
    }

private:
    TdftmParams params_;
    std::vector<TdftmEmbedding> ref_embeddings_;
};

class EmbedBackend final : public Backend {
public:
    EmbedBackend(int fallback_dim, std::optional<std::filesystem::path> ref_path,
                 std::optional<std::filesystem::path> query_path)
        : fallback_dim_(fallback_dim), ref_path_(std::move(ref_path)),
          query_path_(std::move(query_path)) {}

    void prepare(const ReferenceSet& refs, int parallelism) override {
        (void)parallelism;
        if (ref_path_) {
            std::map<std::string, TrackEmbedding> by_id;
            for (auto& e : load_embeddings(*ref_path_)) {
                const std::string id = e.id;
                by_id.emplace(id, std::move(e));
            }
            ref_rows_.clear();
            for (const auto& entry : refs.entries) {
                const auto it = by_id.find(entry.track_id);
                if (it == by_id.end())
                    throw MissingFile("no embedding for reference '" + entry.track_id + "'");
                ref_rows_.push_back(it->second);
            }
            if (query_path_) {
                for (auto& e : load_embeddings(*query_path_))
                    query_rows_.emplace(e.id, std::move(e));
            }
        } else {
            ref_rows_.assign(refs.pcps.size(), TrackEmbedding{});
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(parallelism)
#endif
            for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(refs.pcps.size()); ++r) {
                const std::size_t i = static_cast<std::size_t>(r);
                ref_rows_[i] = fallback_embed(view_of(refs.pcps[i]), fallback_dim_,
                                              refs.entries[i].track_id);
            }
        }
    }

    std::vector<double> window_distances(PcpView window, std::size_t window_index,
                                         const BeatGrid* /*window_beats*/) const override {
        const TrackEmbedding q = query_embedding(window, window_index);
        std::vector<double> out(ref_rows_.size());
        for (std::size_t r = 0; r < ref_rows_.size(); ++r)
            out[r] = cosine_distance(q, ref_rows_[r]);
        return out;
    }

private:
    TrackEmbedding query_embedding(PcpView window, std::size_t window_index) const {
        if (!ref_path_)
            return fallback_embed(window, fallback_dim_, "query");
        const std::string key = "w" + std::to_string(window_index);
        const auto it = query_rows_.find(key);
        if (it == query_rows_.end())
            throw MissingFile("no query embedding '" + key + "'; backend 'embed' needs "
                              "--query-embeddings covering every window");
        return it->second;
    }

    int fallback_dim_;
    std::optional<std::filesystem::path> ref_path_;
    std::optional<std::filesystem::path> query_path_;
    std::vector<TrackEmbedding> ref_rows_; // aligned with refs.entries
    std::map<std::string, TrackEmbedding> query_rows_;
};

} // namespace

std::unique_ptr<Backend> make_backend(const RunConfig& cfg) {
    switch (cfg.backend) {
    case BackendKind::qmax:
        return std::make_unique<QmaxBackend>(cfg.qmax);
    case BackendKind::tdftm:
        return std::make_unique<TdftmBackend>(cfg.tdftm);
    case BackendKind::embed:
        if (!cfg.embeddings_path)
            throw MissingFile("backend 'embed' requires --embeddings");
        return std::make_unique<EmbedBackend>(cfg.fallback_dim, cfg.embeddings_path,
                                              cfg.query_embeddings_path);
    case BackendKind::embed_fallback:
        return std::make_unique<EmbedBackend>(cfg.fallback_dim, std::nullopt, std::nullopt);
    }
    throw UnknownEnumValue("backend");
}

namespace {

// Concert beat times falling inside the window, re-origined to its start.
std::optional<BeatGrid> slice_beats(const BeatGrid* concert_beats, const QueryWindow& w) {
    if (concert_beats == nullptr)
        return std::nullopt;
    BeatGrid out;
    for (const double t : concert_beats->beat_times_s)
        if (t >= w.start_s && t < w.end_s)
            out.beat_times_s.push_back(t - w.start_s);
    return out;
}

// All window-vs-reference distances, parallel over windows. Each cell is
// computed independently and the merge is keyed by (window, reference),
// so the result does not depend on the schedule or thread count.
std::vector<std::vector<double>> all_distances(const Backend& backend,
                                               const PcpMatrix& concert,
                                               const std::vector<QueryWindow>& windows,
                                               int parallelism,
                                               const BeatGrid* concert_beats) {
    (void)parallelism;
    std::vector<std::vector<double>> rows(windows.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(parallelism)
#endif
    for (std::ptrdiff_t w = 0; w < static_cast<std::ptrdiff_t>(windows.size()); ++w) {
        const std::size_t i = static_cast<std::size_t>(w);
        const std::optional<BeatGrid> beats = slice_beats(concert_beats, windows[i]);
        rows[i] = backend.window_distances(windows[i].view(concert), windows[i].index,
                                           beats ? &*beats : nullptr);
    }
    return rows;
}

} // namespace

SetlistDocument document_from_matches(std::span<const RawMatch> matches,
                                      const std::string& concert_id, double frame_rate_hz,
                                      const ReferenceSet& refs, const RunConfig& cfg) {
    const std::vector<Segment> segments = consolidate(matches, 1.0 / frame_rate_hz);

    std::optional<MatchClassifier> clf;
    if (cfg.classifier_path)
        clf = load_classifier(*cfg.classifier_path);

    SetlistDocument doc;
    doc.concert_id = concert_id;
    doc.config.backend = to_string(cfg.backend);
    doc.config.window_s = cfg.windowing.window_s;
    doc.config.hop_s = cfg.windowing.hop_s * static_cast<double>(cfg.keep_every);
    doc.config.classifier_id = clf ? clf->id : "none";
    for (const auto& s : segments) {
        SetlistEntry e;
        e.song_id = s.ref_id;
        for (const auto& entry : refs.entries) {
            if (entry.track_id == s.ref_id) {
                e.artist = entry.artist;
                e.title = entry.title;
                break;
            }
        }
        e.start_s = s.start_s;
        e.end_s = s.end_s;
        e.distance = s.distance;
        e.accepted =
            clf ? (classifier_score(*clf, s.distance, s.end_s - s.start_s) >= 0.0) : true;
        doc.entries.push_back(std::move(e));
    }
    validate_setlist(doc);
    return doc;
}

SetlistDocument identify(const PcpMatrix& concert, const std::string& concert_id,
                         const ReferenceSet& refs, const RunConfig& cfg,
                         std::vector<RawMatch>* raw_out, const BeatGrid* concert_beats) {
    if (refs.entries.empty())
        throw EmptyCatalog("reference catalog is empty");
    validate_pcp(concert);
    const int parallelism = cfg.parallelism < 1 ? 1 : cfg.parallelism;

    const std::vector<QueryWindow> windows =
        decimate_windows(make_windows(concert, cfg.windowing), cfg.keep_every);

    auto backend = make_backend(cfg);
    backend->prepare(refs, parallelism);
    const auto distances =
        all_distances(*backend, concert, windows, parallelism, concert_beats);

    std::vector<RawMatch> matches;
    matches.reserve(windows.size());
    for (std::size_t w = 0; w < windows.size(); ++w) {
        const auto& row = distances[w];
        std::size_t best = 0;
        for (std::size_t r = 1; r < row.size(); ++r)
            if (row[r] < row[best])
                best = r; // ties keep the smaller track_id (refs are sorted)
        RawMatch m;
        m.window_index = windows[w].index;
        m.start_s = windows[w].start_s;
        m.end_s = windows[w].end_s;
        m.ref_id = refs.entries[best].track_id;
        m.distance = row[best];
        matches.push_back(std::move(m));
    }
    if (raw_out != nullptr)
        *raw_out = matches;

    return document_from_matches(matches, concert_id, concert.frame_rate_hz, refs, cfg);
}

std::vector<Segment> accepted_segments(const SetlistDocument& doc) {
    std::vector<Segment> out;
    for (const auto& e : doc.entries)
        if (e.accepted)
            out.push_back(Segment{e.song_id, e.start_s, e.end_s, e.distance});
    return out;
}

std::vector<Segment> all_segments(const SetlistDocument& doc) {
    std::vector<Segment> out;
    for (const auto& e : doc.entries)
        out.push_back(Segment{e.song_id, e.start_s, e.end_s, e.distance});
    return out;
}

std::vector<BenchPhase> bench(const PcpMatrix& concert, const ReferenceSet& refs,
                              const std::vector<RunConfig>& configs, int repeats,
                              const BeatGrid* concert_beats) {
    if (refs.entries.empty())
        throw EmptyCatalog("reference catalog is empty");
    if (repeats < 3)
        repeats = 3;
    using clock = std::chrono::steady_clock;
    std::vector<BenchPhase> rows;
    for (const auto& cfg : configs) {
        BenchPhase prep{to_string(cfg.backend), "reference_prep", {}, 0.0};
        BenchPhase dist{to_string(cfg.backend), "distance", {}, 0.0};
        const std::vector<QueryWindow> windows =
            decimate_windows(make_windows(concert, cfg.windowing), cfg.keep_every);
        for (int rep = 0; rep < repeats; ++rep) {
            auto backend = make_backend(cfg);
            const auto t0 = clock::now();
            backend->prepare(refs, cfg.parallelism);
            const auto t1 = clock::now();
            const auto distances =
                all_distances(*backend, concert, windows, cfg.parallelism, concert_beats);
            const auto t2 = clock::now();
            // keep the result alive so the pass cannot be optimized away
            volatile double sink = distances.back().back();
            (void)sink;
            prep.runs_s.push_back(std::chrono::duration<double>(t1 - t0).count());
            dist.runs_s.push_back(std::chrono::duration<double>(t2 - t1).count());
        }
        const auto median = [](std::vector<double> v) {
            std::sort(v.begin(), v.end());
            return v[v.size() / 2];
        };
        prep.median_s = median(prep.runs_s);
        dist.median_s = median(dist.runs_s);
        rows.push_back(std::move(prep));
        rows.push_back(std::move(dist));
    }
    return rows;
}

std::string bench_csv(const std::vector<BenchPhase>& rows) {
    std::ostringstream ss;
    ss << "backend,phase,median_s";
    std::size_t max_runs = 0;
    for (const auto& r : rows)
        max_runs = std::max(max_runs, r.runs_s.size());
    for (std::size_t i = 0; i < max_runs; ++i)
        ss << ",run" << (i + 1) << "_s";
    ss << "\n";
    for (const auto& r : rows) {
        ss << r.backend << ',' << r.phase << ',' << format_double(r.median_s);
        for (const double v : r.runs_s)
            ss << ',' << format_double(v);
        ss << "\n";
    }
    return ss.str();
}

void evaluate_results(const CatalogManifest& manifest, const std::filesystem::path& results_dir,
                      const std::filesystem::path& out_dir) {
    if (manifest.concerts.empty())
        throw MissingResults("manifest lists no concerts");
    std::vector<std::pair<std::string, EvalCounts>> per_concert;
    for (const auto& concert : manifest.concerts) {
        const auto doc_path = results_dir / (concert.concert_id + ".setlist");
        if (!std::filesystem::exists(doc_path))
            throw MissingResults("no setlist document for '" + concert.concert_id + "' in " +
                                 results_dir.string());
        const SetlistDocument doc = read_setlist_document(doc_path);
        const auto annotations = load_annotations(concert.annotation_path);
        for (const auto& a : annotations)
            if (a.song_id != "unknown" && manifest.find_reference(a.song_id) == nullptr)
                throw ParseError("annotation song '" + a.song_id + "' of concert '" +
                                 concert.concert_id + "' is not in the reference catalog");
        per_concert.emplace_back(concert.concert_id,
                                 evaluate(accepted_segments(doc), annotations));
    }
    const EvalReport report = aggregate(per_concert, manifest);
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir / "report.csv", report_csv(report));
    write_text_file(out_dir / "report.txt", report_text(report));
}

} // namespace sli
