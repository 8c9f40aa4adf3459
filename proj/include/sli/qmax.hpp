#pragma once

#include "sli/pcp.hpp"
#include "sli/real_matrix.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace sli {

// Alignment-based version identification: frame stacking, optimal
// transposition, binary cross-recurrence, and a local-alignment dynamic
// program whose best cell scores the longest aligned subsequence.

struct QmaxParams {
    int stack_size = 9;       // frames concatenated per embedding row
    int stack_stride = 1;     // gap between stacked frames
    double kappa = 0.095;     // recurrence quantile
    double gap_onset = 0.5;   // penalty after a matched cell
    double gap_extend = 0.7;  // penalty after an unmatched cell
    bool oti_enabled = true;
    // sqrt(n_ref)/score when true, n_ref/score when false
    bool sqrt_normalization = true;
};

// Returned when the alignment score is zero, keeping sorting and
// serialization total without infinities.
inline constexpr double kMaxDistance = 1.0e9;

// Number of stacked rows produced from n frames (0 if too short).
inline std::size_t stacked_rows(std::size_t n_frames, int m, int stride) {
    const std::size_t span = static_cast<std::size_t>(m - 1) * static_cast<std::size_t>(stride);
    return n_frames > span ? n_frames - span : 0;
}

// Row i is the concatenation of frames i, i+stride, ..., i+(m-1)*stride.
// Throws TooShort when fewer frames than one stack.
RealMatrix stack_frames(PcpView view, int m, int stride);

// Optimal transposition index: the circular shift k such that
// rotate_pitch(query, k) best aligns with ref, estimated from global
// mean profiles. Ties break toward the smallest k. Throws
// DegenerateProfile when either global profile is all zero.
int compute_oti(PcpView query, PcpView ref);
int compute_oti_profiles(const std::array<double, kPcpBins>& query_mean,
                         const std::array<double, kPcpBins>& ref_mean);

std::array<double, kPcpBins> mean_profile(PcpView view);

struct CrossRecurrenceMatrix {
    std::size_t rows = 0; // query side
    std::size_t cols = 0; // reference side
    std::vector<std::uint8_t> bits;

    std::uint8_t at(std::size_t i, std::size_t j) const { return bits[i * cols + j]; }
    const std::uint8_t* row(std::size_t i) const { return bits.data() + i * cols; }
    double mean() const;
};

// bits(i,j) = 1 iff the Euclidean distance of stacked rows i and j is at
// most the kappa-quantile of row i AND of column j, with the quantile
// defined as the smallest value v such that >= ceil(kappa*n) entries
// are <= v. Straightforward double-precision implementation, kept as the
// reference for the optimized kernel below.
CrossRecurrenceMatrix binarize_cross_similarity(const RealMatrix& query_stacked,
                                                const RealMatrix& ref_stacked, double kappa);

// Local alignment DP over the recurrence matrix. Matched cells extend the
// best of predecessors (i-1,j-1), (i-2,j-1), (i-1,j-2) by one; unmatched
// cells carry the best predecessor minus gap_onset (if the predecessor
// matched) or gap_extend (if it did not), floored at zero. Out-of-range
// predecessors count as zero. Returns the maximum cell value.
double qmax_score(const CrossRecurrenceMatrix& c, double gap_onset, double gap_extend);

// Scratch buffers reused across pair computations; one per thread.
struct QmaxWorkspace {
    std::vector<float> frame_dist; // ring of per-frame distance rows
    std::vector<float> stacked_dist;
    std::vector<float> transposed;
    std::vector<float> quantile_scratch;
    std::vector<float> row_threshold;
    std::vector<float> col_threshold;
    std::vector<std::uint8_t> bits;
};

// A reference digested for repeated comparisons: bin-major frame layout
// (12 contiguous rows), so transposition becomes a row permutation, plus
// the global mean profile for transposition estimation.
struct PreparedRef {
    std::size_t n_frames = 0;
    std::vector<float> bins; // 12 rows of n_frames
    std::array<double, kPcpBins> mean{};

    const float* bin(int c) const { return bins.data() + static_cast<std::size_t>(c) * n_frames; }
};

PreparedRef prepare_reference(PcpView ref);

// Optimized cross-recurrence construction used by the full pipeline.
// Exploits the block structure of stacked-frame distances: the squared
// distance of stacked rows is the sum of m per-frame squared distances
// along a diagonal, so the 12m-dimensional products never materialize
// and per-frame rows stream through a small ring buffer. OTI rotation of
// the reference must be applied by the caller.
CrossRecurrenceMatrix cross_recurrence_fast(PcpView query, PcpView ref,
                                            const QmaxParams& params, QmaxWorkspace& ws);

// sqrt(n_ref_stacked) / score (or n_ref_stacked / score with the sqrt
// normalization off), or kMaxDistance when the score is zero.
double qmax_distance_from_score(double score, std::size_t n_ref_stacked,
                                bool sqrt_normalization = true);

// Full pairwise distance with OTI rotation of the reference when enabled.
// The PreparedRef overload takes the query's mean profile so per-window
// work is not repeated across references.
double qmax_distance(PcpView query, const std::array<double, kPcpBins>& query_mean,
                     const PreparedRef& ref, const QmaxParams& params, QmaxWorkspace& ws);
double qmax_distance(PcpView query, PcpView ref, const QmaxParams& params, QmaxWorkspace& ws);
double qmax_distance(PcpView query, PcpView ref, const QmaxParams& params);

} // namespace sli
