#pragma once

#include "sli/pcp.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sli {

// External-embedding backend: fixed-size vectors per track or window,
// retrieved by cosine distance. Vectors normally arrive precomputed from
// file; fallback_embed provides a deterministic built-in embedder so the
// full pipeline runs without any model.

struct TrackEmbedding {
    std::vector<float> vector;
    std::string id;
    double norm = 0.0; // cached Euclidean norm

    static TrackEmbedding make(std::vector<float> values, std::string id);
};

// Binary layout (little-endian):
//   magic "SLEM" | u32 version=1 | u32 count | u32 dim
//   | per row: u16 id length, id bytes, dim f32
// Zero-norm rows are rejected at load. Throws DimensionMismatch,
// ZeroNorm, ParseError.
std::vector<TrackEmbedding> load_embeddings(const std::filesystem::path& path);

// Throws DimensionMismatch if rows disagree on dimension.
void write_embeddings(std::span<const TrackEmbedding> embeddings,
                      const std::filesystem::path& path);

// Deterministic hand-crafted embedding: d/24 blocks of (weighted mean,
// weighted deviation) PCP statistics under fixed cosine time-weights.
// d must be a multiple of 24. Identical inputs give identical vectors.
TrackEmbedding fallback_embed(PcpView view, int d, std::string id);

// 1 - dot(a,b)/(|a||b|), in [0, 2].
double cosine_distance(const TrackEmbedding& a, const TrackEmbedding& b);

// Immutable after build; concurrent top1 queries are safe.
class EmbeddingIndex {
public:
    EmbeddingIndex() = default;
    explicit EmbeddingIndex(std::vector<TrackEmbedding> references);

    // Reference with minimum cosine distance; ties break toward the
    // lexicographically smallest id. Throws EmptyIndex, DimensionMismatch.
    std::pair<std::string, double> top1(const TrackEmbedding& query) const;

    std::size_t size() const { return ids_.size(); }
    std::size_t dim() const { return dim_; }

private:
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;      // sorted
    std::vector<double> normalized_;    // row-major, unit rows within 1e-9
};

} // namespace sli
