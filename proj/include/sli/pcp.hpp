#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sli {

inline constexpr int kPcpBins = 12;

// Frame rate of a hop of 4096 samples at 44.1 kHz.
inline constexpr double kDefaultFrameRateHz = 44100.0 / 4096.0;

// Pitch-class-profile matrix, n_frames x 12, row-major float payload.
// Entries are validated into [0, 1] at construction; instances are
// treated as immutable afterwards and safe to share across threads.
struct PcpMatrix {
    std::vector<float> values; // n_frames * kPcpBins
    std::size_t n_frames = 0;
    double frame_rate_hz = kDefaultFrameRateHz;

    const float* frame(std::size_t i) const { return values.data() + i * kPcpBins; }
    float* frame(std::size_t i) { return values.data() + i * kPcpBins; }
    double duration_s() const { return static_cast<double>(n_frames) / frame_rate_hz; }
};

// Lightweight read-only window onto a PcpMatrix (or a whole one).
struct PcpView {
    const float* data = nullptr;
    std::size_t n_frames = 0;
    double frame_rate_hz = kDefaultFrameRateHz;

    const float* frame(std::size_t i) const { return data + i * kPcpBins; }
    double duration_s() const { return static_cast<double>(n_frames) / frame_rate_hz; }
};

inline PcpView view_of(const PcpMatrix& m) {
    return PcpView{m.values.data(), m.n_frames, m.frame_rate_hz};
}

inline PcpView view_of(const PcpMatrix& m, std::size_t frame_begin, std::size_t frame_end) {
    return PcpView{m.values.data() + frame_begin * kPcpBins, frame_end - frame_begin,
                   m.frame_rate_hz};
}

struct BeatGrid {
    std::vector<double> beat_times_s; // strictly increasing, >= 0
};

enum class SourceKind { reference, concert };

struct FeatureMeta {
    std::string track_id;
    double duration_s = 0.0;
    SourceKind source_kind = SourceKind::reference;
};

// Validating constructor: clamps [0,1] violations up to 1e-6, rejects
// anything worse. Throws EmptyFeature, ShapeMismatch, NonFiniteValue,
// ValueOutOfRange.
PcpMatrix make_pcp_matrix(std::vector<float> values, double frame_rate_hz);

// Re-checks the PcpMatrix invariants (finite, in range, 12 bins).
void validate_pcp(const PcpMatrix& m);

// Throws ParseError if the grid is not strictly increasing, negative, or
// extends past duration_s.
void validate_beats(const BeatGrid& beats, double duration_s);

double frame_to_seconds(std::size_t frame_index, double frame_rate_hz);

// Largest frame index whose start time is <= t (floor).
std::size_t seconds_to_frame(double t_s, double frame_rate_hz);

// Circular pitch transposition: output column c takes input column
// (c - k) mod 12, i.e. energy moves up by k semitones.
PcpMatrix rotate_pitch(const PcpMatrix& m, int k);

// Linear time interpolation to round(n_frames * factor) frames.
// factor must lie in [0.5, 2.0]; frame rate is unchanged.
PcpMatrix time_stretch(const PcpMatrix& m, double factor);

} // namespace sli
