#pragma once

#include "sli/catalog.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sli {

// One window's best reference.
struct RawMatch {
    std::size_t window_index = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    std::string ref_id;
    double distance = 0.0;
};

// Consolidated, non-overlapping result unit.
struct Segment {
    std::string ref_id;
    double start_s = 0.0;
    double end_s = 0.0;
    double distance = 0.0; // minimum over constituent matches
};

// Turns per-window matches into disjoint segments in three steps:
//   1. merge consecutive overlapping-or-abutting matches of one
//      reference, keeping the lowest distance;
//   2. cut the timeline at every interval breakpoint and give each piece
//      to the covering segment with the lowest distance, discarding
//      pieces shorter than one frame;
//   3. re-join abutting (gap within one frame) same-reference pieces.
// Matches must arrive sorted by window index (UnsortedInput otherwise).
std::vector<Segment> consolidate(std::span<const RawMatch> matches, double frame_duration_s);

// True iff the segment overlaps (positive length) an annotation with the
// same song id.
std::vector<std::pair<Segment, bool>> label_segments(std::span<const Segment> segments,
                                                     std::span<const Annotation> annotations);

// Linear decision rule over standardized (distance, duration) features.
struct MatchClassifier {
    std::array<double, 2> weights{};
    double bias = 0.0;
    std::array<double, 2> feature_means{};
    std::array<double, 2> feature_stds{};
    std::string id;
};

struct LabeledPoint {
    double distance = 0.0;
    double duration_s = 0.0;
    bool correct = false;
};

// Hinge-loss subgradient descent with L2 regularization (lambda 1e-3,
// 200 epochs, step 1/(lambda*t), shuffling fixed by seed). Identical
// inputs and seed reproduce identical weights. Requires both classes and
// at least 10 samples.
MatchClassifier train_classifier(std::span<const LabeledPoint> samples, std::uint64_t seed,
                                 std::string id);

// Accepted iff w . z + b >= 0 for the standardized feature vector z.
std::vector<std::pair<Segment, bool>> apply_classifier(const MatchClassifier& clf,
                                                       std::span<const Segment> segments);

double classifier_score(const MatchClassifier& clf, double distance, double duration_s);

void save_classifier(const MatchClassifier& clf, const std::filesystem::path& path);
MatchClassifier load_classifier(const std::filesystem::path& path);

} // namespace sli
