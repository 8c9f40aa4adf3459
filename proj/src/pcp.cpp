#include "sli/pcp.hpp"

#include "sli/errors.hpp"

#include <cmath>
#include <string>

namespace sli {

namespace {
constexpr float kClampTolerance = 1e-6f;
}

PcpMatrix make_pcp_matrix(std::vector<float> values, double frame_rate_hz) {
    if (!(frame_rate_hz > 0.0))
        throw ValueOutOfRange("frame rate must be positive, got " +
                              std::to_string(frame_rate_hz));
    if (values.empty())
        throw EmptyFeature("feature matrix has no frames");
    if (values.size() % kPcpBins != 0)
        throw ShapeMismatch("value count " + std::to_string(values.size()) +
                            " is not a multiple of " + std::to_string(kPcpBins));
    for (float& v : values) {
        if (!std::isfinite(v))
            throw NonFiniteValue("feature matrix contains a non-finite entry");
        if (v < 0.0f) {
            if (v < -kClampTolerance)
                throw ValueOutOfRange("entry " + std::to_string(v) + " below 0");
            v = 0.0f;
        } else if (v > 1.0f) {
            if (v > 1.0f + kClampTolerance)
                throw ValueOutOfRange("entry " + std::to_string(v) + " above 1");
            v = 1.0f;
        }
    }
    PcpMatrix m;
    m.n_frames = values.size() / kPcpBins;
    m.values = std::move(values);
    m.frame_rate_hz = frame_rate_hz;
    return m;
}

void validate_pcp(const PcpMatrix& m) {
    if (m.n_frames == 0)
        throw EmptyFeature("feature matrix has no frames");
    if (m.values.size() != m.n_frames * kPcpBins)
        throw ShapeMismatch("payload size does not match frame count");
    if (!(m.frame_rate_hz > 0.0))
        throw ValueOutOfRange("frame rate must be positive");
    for (const float v : m.values) {
        if (!std::isfinite(v))
            throw NonFiniteValue("feature matrix contains a non-finite entry");
        if (v < 0.0f || v > 1.0f)
            throw ValueOutOfRange("entry " + std::to_string(v) + " outside [0, 1]");
    }
}

void validate_beats(const BeatGrid& beats, double duration_s) {
    double prev = -1.0;
    for (const double t : beats.beat_times_s) {
        if (!std::isfinite(t) || t < 0.0)
            throw ParseError("beat time " + std::to_string(t) + " invalid");
        if (t <= prev)
            throw ParseError("beat times must be strictly increasing");
        if (t > duration_s)
            throw ParseError("beat time " + std::to_string(t) + " beyond track end");
        prev = t;
    }
}

double frame_to_seconds(std::size_t frame_index, double frame_rate_hz) {
    return static_cast<double>(frame_index) / frame_rate_hz;
}

std::size_t seconds_to_frame(double t_s, double frame_rate_hz) {
    if (t_s <= 0.0)
        return 0;
    return static_cast<std::size_t>(t_s * frame_rate_hz);
}

PcpMatrix rotate_pitch(const PcpMatrix& m, int k) {
    k = ((k % kPcpBins) + kPcpBins) % kPcpBins;
    PcpMatrix out;
    out.n_frames = m.n_frames;
    out.frame_rate_hz = m.frame_rate_hz;
    out.values.resize(m.values.size());
    for (std::size_t i = 0; i < m.n_frames; ++i) {
        const float* src = m.frame(i);
        float* dst = out.frame(i);
        for (int c = 0; c < kPcpBins; ++c)
            dst[c] = src[(c - k + kPcpBins) % kPcpBins];
    }
    return out;
}

PcpMatrix time_stretch(const PcpMatrix& m, double factor) {
    if (!(factor >= 0.5 && factor <= 2.0))
        throw FactorOutOfRange("stretch factor " + std::to_string(factor) +
                               " outside [0.5, 2.0]");
    const std::size_t n_in = m.n_frames;
    std::size_t n_out = static_cast<std::size_t>(
        std::llround(static_cast<double>(n_in) * factor));
    if (n_out == 0)
        n_out = 1;

    PcpMatrix out;
    out.n_frames = n_out;
    out.frame_rate_hz = m.frame_rate_hz;
    out.values.resize(n_out * kPcpBins);
    for (std::size_t i = 0; i < n_out; ++i) {
        // Map output frame i onto the input range so that the endpoints
        // coincide; factor 1 is the identity.
        double src = (n_out == 1)
                         ? 0.0
                         : static_cast<double>(i) * static_cast<double>(n_in - 1) /
                               static_cast<double>(n_out - 1);
        const std::size_t lo = static_cast<std::size_t>(src);
        const std::size_t hi = (lo + 1 < n_in) ? lo + 1 : lo;
        const double w = src - static_cast<double>(lo);
        const float* a = m.frame(lo);
        const float* b = m.frame(hi);
        float* dst = out.frame(i);
        for (int c = 0; c < kPcpBins; ++c)
            dst[c] = static_cast<float>((1.0 - w) * a[c] + w * b[c]);
    }
    return out;
}

} // namespace sli
