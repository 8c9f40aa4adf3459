#pragma once

#include "sli/pcp.hpp"

#include <filesystem>
#include <optional>

namespace sli {

struct FeatureFile {
    PcpMatrix pcp;
    FeatureMeta meta;
    std::optional<BeatGrid> beats;
};

// Binary layout (little-endian):
//   magic "SLPC" | u32 version=1 | u32 n_frames | u32 n_bins | f64 frame_rate_hz
//   | u8 has_beats | n_frames*n_bins f32 row-major
//   | if has_beats: u32 n_beats, n_beats f64 beat times (seconds)
FeatureFile parse_feature_file(const std::filesystem::path& path);

void write_feature_file(const PcpMatrix& matrix, const FeatureMeta& meta,
                        const std::optional<BeatGrid>& beats,
                        const std::filesystem::path& path);

// CSV alternative: header "frame,b0,...,b11", one row per frame. The file
// carries no rate, so the caller supplies one.
PcpMatrix parse_feature_csv(const std::filesystem::path& path, double frame_rate_hz);

} // namespace sli
