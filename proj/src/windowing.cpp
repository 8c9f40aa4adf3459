#include "sli/windowing.hpp"

#include "sli/errors.hpp"

#include <cmath>
#include <string>

namespace sli {

void validate_windowing(const WindowingConfig& cfg) {
    if (!(cfg.window_s > cfg.hop_s && cfg.hop_s > 0.0))
        throw ValueOutOfRange("windowing requires W > H > 0, got W=" +
                              std::to_string(cfg.window_s) + " H=" + std::to_string(cfg.hop_s));
    if (!(cfg.min_tail_s >= 0.0 && cfg.min_tail_s <= cfg.window_s))
        throw ValueOutOfRange("min_tail_s must lie in [0, W]");
}

std::vector<QueryWindow> make_windows(const PcpMatrix& concert, const WindowingConfig& cfg) {
    validate_windowing(cfg);
    const double rate = concert.frame_rate_hz;
    const std::size_t n = concert.n_frames;
    const std::size_t window_frames =
        static_cast<std::size_t>(cfg.window_s * rate); // round down

    std::vector<QueryWindow> out;
    if (window_frames >= n) {
        // a concert no longer than one window degenerates to one query
        QueryWindow w;
        w.frame_end = n;
        w.end_s = frame_to_seconds(n, rate);
        out.push_back(w);
        return out;
    }
    for (std::size_t k = 0;; ++k) {
        // floor(k*H*rate) rather than k*floor(H*rate), so that decimating
        // by d lands on exactly the start frames of a hop of H*d.
        const std::size_t begin =
            static_cast<std::size_t>(static_cast<double>(k) * cfg.hop_s * rate);
        if (begin >= n)
            break;
        const std::size_t end = (begin + window_frames < n) ? begin + window_frames : n;
        QueryWindow w;
        w.index = k;
        w.frame_begin = begin;
        w.frame_end = end;
        w.start_s = frame_to_seconds(begin, rate);
        w.end_s = frame_to_seconds(end, rate);
        if (w.end_s - w.start_s >= cfg.min_tail_s)
            out.push_back(w);
    }
    if (out.empty()) {
        QueryWindow w;
        w.index = 0;
        w.frame_begin = 0;
        w.frame_end = n;
        w.start_s = 0.0;
        w.end_s = frame_to_seconds(n, rate);
        out.push_back(w);
    }
    return out;
}

std::vector<QueryWindow> decimate_windows(const std::vector<QueryWindow>& windows,
                                          std::size_t keep_every) {
    if (keep_every < 1)
        throw ValueOutOfRange("keep_every must be >= 1");
    std::vector<QueryWindow> out;
    for (const auto& w : windows)
        if (w.index % keep_every == 0)
            out.push_back(w);
    return out;
}

} // namespace sli
