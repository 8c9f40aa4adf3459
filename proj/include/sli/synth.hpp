#pragma once

#include "sli/catalog.hpp"
#include "sli/pcp.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace sli {

// Deterministic generator for reference catalogs and concerts with exact
// ground-truth annotations, exercising the degradations live sets bring:
// key transposition, tempo change, structural truncation, noise gaps.

struct SynthConfig {
    std::uint64_t seed = 1;
    int n_references = 50;
    int n_distractors = 0; // additional references never played
    std::pair<double, double> ref_duration_range_s{120.0, 300.0};
    std::pair<int, int> songs_per_concert_range{8, 12};
    std::pair<double, double> gap_range_s{5.0, 20.0};
    double transpose_prob = 0.0;
    double stretch_prob = 0.0;
    double truncate_prob = 0.0;
    std::pair<double, double> stretch_range{0.8, 1.25};
    double noise_level = 0.05; // in [0, 1]
    double frame_rate_hz = kDefaultFrameRateHz;
};

void validate_synth_config(const SynthConfig& cfg);

// Chord-progression PCP: 4-8 chord templates cycled with smooth
// transitions plus a low noise floor. Deterministic per seed. Requires
// duration >= 30 s.
PcpMatrix synth_reference(std::uint64_t seed, double duration_s, double frame_rate_hz);
std::pair<PcpMatrix, FeatureMeta> synth_reference_with_meta(std::uint64_t seed,
                                                            double duration_s,
                                                            double frame_rate_hz);

struct SynthCatalog {
    std::vector<std::string> ids;   // playable refs first, then distractors
    std::vector<PcpMatrix> pcps;
    int n_playable = 0;
};

// Generates n_references playable and n_distractors extra references with
// pairwise global-profile cosine distance >= 0.05 (regenerating on
// collisions).
SynthCatalog synth_catalog(const SynthConfig& cfg);

struct SynthConcert {
    PcpMatrix pcp;
    std::vector<Annotation> annotations;
};

// Draws songs without replacement from the playable references, applies
// the configured per-song transforms, and concatenates them with noise
// gaps. Annotation timestamps are exact post-transform frame boundaries.
SynthConcert synth_concert(const SynthCatalog& refs, const SynthConfig& cfg,
                           std::uint64_t seed);

// Writes feature files, annotations, and a manifest under out_dir
// (refs/, concerts/, annotations/, manifest.txt). Concerts cycle through
// the audio-quality and genre labels so grouped evaluation has data.
void synth_dataset(const SynthConfig& cfg, int n_concerts,
                   const std::filesystem::path& out_dir);

} // namespace sli
