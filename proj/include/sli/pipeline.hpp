#pragma once

#include "sli/catalog.hpp"
#include "sli/embed.hpp"
#include "sli/pcp.hpp"
#include "sli/postprocess.hpp"
#include "sli/qmax.hpp"
#include "sli/tdftm.hpp"
#include "sli/windowing.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sli {

enum class BackendKind { qmax, tdftm, embed, embed_fallback };

std::string to_string(BackendKind k);
BackendKind parse_backend(std::string_view name); // qmax | 2dftm | embed | embed-fallback

struct RunConfig {
    BackendKind backend = BackendKind::qmax;
    WindowingConfig windowing;
    std::size_t keep_every = 1;
    int parallelism = 1;
    QmaxParams qmax;
    TdftmParams tdftm;
    int fallback_dim = 240;
    // backend 'embed': reference embeddings plus per-window query
    // embeddings with ids "w<window_index>"
    std::optional<std::filesystem::path> embeddings_path;
    std::optional<std::filesystem::path> query_embeddings_path;
    std::optional<std::filesystem::path> classifier_path;
};

// References loaded into memory, sorted by track id.
struct ReferenceSet {
    std::vector<ReferenceEntry> entries;
    std::vector<PcpMatrix> pcps;
    std::vector<std::optional<BeatGrid>> beats;
};

ReferenceSet load_references(const CatalogManifest& manifest);

// Distance backends share this two-phase shape so that identification and
// benchmarking drive them identically: prepare() digests the reference
// set once, window_distances() scores one window against every reference
// (ordered as refs.entries). window_beats, when non-null, holds the
// concert's beat times inside the window re-origined to its start.
class Backend {
public:
    virtual ~Backend() = default;
    virtual void prepare(const ReferenceSet& refs, int parallelism) = 0;
    virtual std::vector<double> window_distances(PcpView window, std::size_t window_index,
                                                 const BeatGrid* window_beats) const = 0;
};

std::unique_ptr<Backend> make_backend(const RunConfig& cfg);

// Full per-concert workflow: windows, per-window top-1 retrieval,
// consolidation, optional classifier. Deterministic for fixed inputs and
// config, independent of the parallelism degree. raw_out, when non-null,
// receives the per-window matches before consolidation.
SetlistDocument identify(const PcpMatrix& concert, const std::string& concert_id,
                         const ReferenceSet& refs, const RunConfig& cfg,
                         std::vector<RawMatch>* raw_out = nullptr,
                         const BeatGrid* concert_beats = nullptr);

// The post-retrieval half of identify: consolidates already-computed
// matches and applies the configured classifier, so dumped raw matches
// can be re-ingested and yield the identical document.
SetlistDocument document_from_matches(std::span<const RawMatch> matches,
                                      const std::string& concert_id, double frame_rate_hz,
                                      const ReferenceSet& refs, const RunConfig& cfg);

std::vector<Segment> accepted_segments(const SetlistDocument& doc);
std::vector<Segment> all_segments(const SetlistDocument& doc);

struct BenchPhase {
    std::string backend;
    std::string phase; // "reference_prep" or "distance"
    std::vector<double> runs_s;
    double median_s = 0.0;
};

// Times reference preprocessing and the full window-vs-reference distance
// pass per backend, repeated `repeats` times (>= 3), reporting medians.
std::vector<BenchPhase> bench(const PcpMatrix& concert, const ReferenceSet& refs,
                              const std::vector<RunConfig>& configs, int repeats,
                              const BeatGrid* concert_beats = nullptr);

std::string bench_csv(const std::vector<BenchPhase>& rows);

// Reads <results_dir>/<concert_id>.setlist for every manifest concert,
// evaluates accepted entries against the annotations, and writes
// report.csv and report.txt under out_dir. Throws MissingResults when a
// document is absent.
void evaluate_results(const CatalogManifest& manifest, const std::filesystem::path& results_dir,
                      const std::filesystem::path& out_dir);

} // namespace sli
