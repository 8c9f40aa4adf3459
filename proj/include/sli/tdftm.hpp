#pragma once

#include "sli/pcp.hpp"
#include "sli/real_matrix.hpp"

#include <string>
#include <vector>

namespace sli {

// Embedding backend: 2D Fourier transform magnitudes of beat-synchronous
// PCP patches, aggregated by an element-wise median, compared with
// Euclidean distance. Shift-invariant in both pitch and beat phase.

struct TdftmParams {
    int patch_beats = 75;             // beats per patch
    int patch_hop = 1;                // beats between patch starts
    double pseudo_beat_period_s = 0.5; // grid period when no beat track exists
};

struct TdftmEmbedding {
    std::vector<double> vector; // 12 * patch_beats magnitudes
    std::string source_id;
};

// Averages frames into beat intervals [beat_k, beat_k+1). When beats is
// null, a uniform grid of pseudo_beat_period_s starting at zero is used;
// grid points at or beyond the view end are dropped. Beat times are
// relative to the view start. Throws TooShort with fewer than two beats.
RealMatrix beat_synchronize(PcpView view, const BeatGrid* beats, const TdftmParams& params);

// Inputs shorter than patch_beats are cyclically tiled up to one patch.
TdftmEmbedding tdftm_embed(const RealMatrix& beat_pcp, const TdftmParams& params);

double tdftm_distance(const TdftmEmbedding& a, const TdftmEmbedding& b);

} // namespace sli
