#pragma once

#include "sli/pcp.hpp"

#include <cstddef>
#include <vector>

namespace sli {

struct WindowingConfig {
    double window_s = 120.0;   // W
    double hop_s = 30.0;       // H
    double min_tail_s = 30.0;  // shorter final slivers are dropped
};

// Throws ValueOutOfRange unless W > H > 0 and min_tail <= W.
void validate_windowing(const WindowingConfig& cfg);

struct QueryWindow {
    std::size_t index = 0;
    std::size_t frame_begin = 0;
    std::size_t frame_end = 0;
    double start_s = 0.0;
    double end_s = 0.0;

    PcpView view(const PcpMatrix& concert) const {
        return view_of(concert, frame_begin, frame_end);
    }
};

// Slides a window of window_s seconds with hop hop_s over the concert.
// Window k starts at frame floor(k*H*rate); the final window is clipped
// to the concert end and kept only if it is at least min_tail_s long.
// A concert shorter than min_tail_s still yields one full-span window.
std::vector<QueryWindow> make_windows(const PcpMatrix& concert, const WindowingConfig& cfg);

// Keeps windows whose index is divisible by keep_every, simulating a
// hop of H*keep_every without recomputing matches.
std::vector<QueryWindow> decimate_windows(const std::vector<QueryWindow>& windows,
                                          std::size_t keep_every);

} // namespace sli
