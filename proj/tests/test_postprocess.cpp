#include "doctest.h"

#include "sli/errors.hpp"
#include "sli/postprocess.hpp"
#include "sli/rng.hpp"

#include <algorithm>
#include <filesystem>

using namespace sli;

namespace {

constexpr double kFrameDur = 0.1;

RawMatch match(std::size_t w, double start, double end, const char* ref, double d) {
    return RawMatch{w, start, end, ref, d};
}

// Window-structured random match sets on a coarse grid, with occasional
// repeated references and distance ties.
std::vector<RawMatch> random_matches(Rng& rng, std::size_t count) {
    std::vector<RawMatch> out;
    double start = 0.0;
    for (std::size_t w = 0; w < count; ++w) {
        const double width = 0.5 * static_cast<double>(rng.uniform_int(2, 8));
        const char* refs[] = {"a", "b", "c", "d"};
        out.push_back(RawMatch{w, start, start + width,
                               refs[rng.uniform_int(0, 3)],
                               0.25 * static_cast<double>(rng.uniform_int(1, 8))});
        start += 0.5 * static_cast<double>(rng.uniform_int(1, 6));
    }
    return out;
}

double covered_length(const std::vector<Segment>& segments) {
    double total = 0.0;
    for (const auto& s : segments)
        total += s.end_s - s.start_s;
    return total;
}

void check_consolidation_properties(const std::vector<RawMatch>& matches,
                                    const std::vector<Segment>& out) {
    // pairwise disjoint and sorted
    for (std::size_t i = 1; i < out.size(); ++i) {
        CHECK(out[i - 1].end_s <= out[i].start_s);
        CHECK(out[i - 1].start_s < out[i - 1].end_s);
    }
    // no invented time: every output instant lies inside some input match
    for (const auto& s : out) {
        for (double probe : {s.start_s + 1e-6, 0.5 * (s.start_s + s.end_s), s.end_s - 1e-6}) {
            bool inside = false;
            for (const auto& m : matches)
                if (m.start_s <= probe && probe < m.end_s)
                    inside = true;
            CHECK(inside);
        }
    }
    // segment distance equals the min over same-ref overlapping inputs
    for (const auto& s : out) {
        double best = 1e300;
        for (const auto& m : matches) {
            if (m.ref_id != s.ref_id)
                continue;
            if (std::min(m.end_s, s.end_s) - std::max(m.start_s, s.start_s) > 0.0)
                best = std::min(best, m.distance);
        }
        CHECK(s.distance == best);
    }
    // idempotent: feeding segments back as one-window matches is a fixpoint
    std::vector<RawMatch> again;
    for (std::size_t i = 0; i < out.size(); ++i)
        again.push_back(RawMatch{i, out[i].start_s, out[i].end_s, out[i].ref_id,
                                 out[i].distance});
    const std::vector<Segment> twice = consolidate(again, kFrameDur);
    REQUIRE(twice.size() == out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(twice[i].ref_id == out[i].ref_id);
        CHECK(twice[i].start_s == out[i].start_s);
        CHECK(twice[i].end_s == out[i].end_s);
        CHECK(twice[i].distance == out[i].distance);
    }
}

} // namespace

TEST_CASE("consolidate merges a same-reference overlapping run") {
    const std::vector<RawMatch> in = {match(0, 0, 120, "A", 0.2), match(1, 30, 150, "A", 0.15)};
    const auto out = consolidate(in, kFrameDur);
    REQUIRE(out.size() == 1);
    CHECK(out[0].ref_id == "A");
    CHECK(out[0].start_s == 0.0);
    CHECK(out[0].end_s == 150.0);
    CHECK(out[0].distance == 0.15);
}

TEST_CASE("consolidate gives a contested overlap to the lower distance") {
    const std::vector<RawMatch> in = {match(0, 0, 120, "A", 0.2), match(1, 60, 180, "B", 0.1)};
    const auto out = consolidate(in, kFrameDur);
    REQUIRE(out.size() == 2);
    CHECK(out[0].ref_id == "A");
    CHECK(out[0].start_s == 0.0);
    CHECK(out[0].end_s == 60.0);
    CHECK(out[0].distance == 0.2);
    CHECK(out[1].ref_id == "B");
    CHECK(out[1].start_s == 60.0);
    CHECK(out[1].end_s == 180.0);
    CHECK(out[1].distance == 0.1);
}

TEST_CASE("consolidate keeps a single match as-is") {
    const auto out = consolidate(std::vector<RawMatch>{match(0, 10, 130, "A", 0.3)}, kFrameDur);
    REQUIRE(out.size() == 1);
    CHECK(out[0].start_s == 10.0);
    CHECK(out[0].end_s == 130.0);
    CHECK(out[0].distance == 0.3);
}

TEST_CASE("consolidate edge cases") {
    CHECK(consolidate(std::vector<RawMatch>{}, kFrameDur).empty());
    const std::vector<RawMatch> unsorted = {match(2, 0, 10, "A", 0.1),
                                            match(1, 5, 15, "A", 0.1)};
    CHECK_THROWS_AS(consolidate(unsorted, kFrameDur), UnsortedInput);
}

TEST_CASE("consolidate properties on random match sets") {
    Rng rng(30);
    for (int rep = 0; rep < 200; ++rep) {
        const auto matches = random_matches(rng, 1 + rng.uniform_int(0, 24));
        const auto out = consolidate(matches, kFrameDur);
        check_consolidation_properties(matches, out);
        CHECK(covered_length(out) > 0.0);
    }
}

TEST_CASE("label_segments uses positive same-song overlap") {
    const std::vector<Annotation> annotations = {{"A", 0.0, 100.0}};
    const std::vector<Segment> segments = {{"A", 10.0, 50.0, 0.1},
                                           {"B", 10.0, 50.0, 0.1},
                                           {"A", 100.0, 150.0, 0.1}};
    const auto labeled = label_segments(segments, annotations);
    REQUIRE(labeled.size() == 3);
    CHECK(labeled[0].second == true);
    CHECK(labeled[1].second == false);
    CHECK(labeled[2].second == false); // endpoint touch has zero length
}

namespace {

std::vector<LabeledPoint> separable_samples(Rng& rng, std::size_t n) {
    std::vector<LabeledPoint> out;
    for (std::size_t i = 0; i < n; ++i) {
        LabeledPoint p;
        if (i % 2 == 0) {
            p.distance = rng.uniform(0.05, 0.3);
            p.duration_s = rng.uniform(60.0, 200.0);
            p.correct = true;
        } else {
            p.distance = rng.uniform(0.7, 1.2);
            p.duration_s = rng.uniform(5.0, 30.0);
            p.correct = false;
        }
        out.push_back(p);
    }
    return out;
}

} // namespace

TEST_CASE("train_classifier separates separable clusters") {
    Rng rng(31);
    const auto samples = separable_samples(rng, 200);
    const MatchClassifier clf = train_classifier(samples, 99, "test");
    std::size_t hits = 0;
    for (const auto& s : samples) {
        const bool predicted = classifier_score(clf, s.distance, s.duration_s) >= 0.0;
        hits += predicted == s.correct ? 1 : 0;
    }
    CHECK(static_cast<double>(hits) / static_cast<double>(samples.size()) >= 0.95);
}

TEST_CASE("train_classifier input validation") {
    Rng rng(32);
    auto samples = separable_samples(rng, 40);
    for (auto& s : samples)
        s.correct = true;
    CHECK_THROWS_AS(train_classifier(samples, 1, "x"), SingleClass);
    const auto few = separable_samples(rng, 6);
    CHECK_THROWS_AS(train_classifier(few, 1, "x"), TooFewSamples);
}

TEST_CASE("train_classifier is bit-deterministic") {
    Rng rng(33);
    const auto samples = separable_samples(rng, 60);
    const MatchClassifier a = train_classifier(samples, 7, "same");
    const MatchClassifier b = train_classifier(samples, 7, "same");
    CHECK(a.weights[0] == b.weights[0]);
    CHECK(a.weights[1] == b.weights[1]);
    CHECK(a.bias == b.bias);
}

TEST_CASE("apply_classifier") {
    MatchClassifier clf;
    clf.weights = {-1.0, 0.0};
    clf.bias = 0.0;
    clf.feature_means = {0.5, 100.0};
    clf.feature_stds = {0.25, 50.0};
    clf.id = "hand";

    SUBCASE("negative distance weight accepts below-mean distances") {
        const std::vector<Segment> segs = {{"A", 0.0, 100.0, 0.2}, {"B", 100.0, 200.0, 0.8}};
        const auto out = apply_classifier(clf, segs);
        REQUIRE(out.size() == 2);
        CHECK(out[0].second == true);  // z = (0.2-0.5)/0.25 < 0, score > 0
        CHECK(out[1].second == false);
    }
    SUBCASE("empty input gives empty output") {
        CHECK(apply_classifier(clf, std::vector<Segment>{}).empty());
    }
    SUBCASE("a score of exactly zero is accepted") {
        const std::vector<Segment> segs = {{"A", 0.0, 50.0, 0.5}}; // z0 = 0 -> score 0
        CHECK(apply_classifier(clf, segs)[0].second == true);
    }
}

TEST_CASE("classifier persistence round trip") {
    Rng rng(34);
    const MatchClassifier clf = train_classifier(separable_samples(rng, 50), 5, "rt-test");
    const auto path = std::filesystem::temp_directory_path() / "sli_clf.txt";
    save_classifier(clf, path);
    const MatchClassifier back = load_classifier(path);
    CHECK(back.id == clf.id);
    CHECK(back.weights[0] == clf.weights[0]);
    CHECK(back.weights[1] == clf.weights[1]);
    CHECK(back.bias == clf.bias);
    CHECK(back.feature_means[0] == clf.feature_means[0]);
    CHECK(back.feature_stds[1] == clf.feature_stds[1]);
}
