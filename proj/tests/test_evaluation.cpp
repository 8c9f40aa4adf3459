#include "doctest.h"

#include "sli/errors.hpp"
#include "sli/evaluation.hpp"
#include "sli/feature_io.hpp"
#include "sli/textio.hpp"

#include <algorithm>
#include <filesystem>

using namespace sli;
namespace fs = std::filesystem;

TEST_CASE("evaluate hand cases") {
    const std::vector<Annotation> annotations = {{"A", 0.0, 100.0}};

    SUBCASE("two correct matches count separately and pool length") {
        const std::vector<Segment> segs = {{"A", 10.0, 50.0, 0.1}, {"A", 60.0, 90.0, 0.1}};
        const EvalCounts c = evaluate(segs, annotations);
        CHECK(c.tp == 2);
        CHECK(c.fp == 0);
        CHECK(c.dap() == 1.0);
        CHECK(c.dlp() == doctest::Approx(0.70));
    }
    SUBCASE("wrong song is a false positive") {
        const std::vector<Segment> segs = {{"B", 10.0, 50.0, 0.1}};
        const EvalCounts c = evaluate(segs, annotations);
        CHECK(c.tp == 0);
        CHECK(c.fp == 1);
        CHECK(c.dap() == 0.0);
        CHECK(c.dlp() == 0.0);
    }
    SUBCASE("no segments at all") {
        const EvalCounts c = evaluate(std::vector<Segment>{}, annotations);
        CHECK(c.tp == 0);
        CHECK(c.fp == 0);
        CHECK(c.dap() == 0.0);
        CHECK(c.dlp() == 0.0);
    }
}

TEST_CASE("evaluate rejects overlapping segments and ignores order") {
    const std::vector<Annotation> annotations = {{"A", 0.0, 100.0}};
    const std::vector<Segment> overlapping = {{"A", 0.0, 50.0, 0.1}, {"B", 40.0, 80.0, 0.1}};
    CHECK_THROWS_AS(evaluate(overlapping, annotations), OverlappingSegments);

    const std::vector<Segment> forward = {{"A", 10.0, 50.0, 0.1}, {"A", 60.0, 90.0, 0.1}};
    const std::vector<Segment> backward = {forward[1], forward[0]};
    const EvalCounts a = evaluate(forward, annotations);
    const EvalCounts b = evaluate(backward, annotations);
    CHECK(a.tp == b.tp);
    CHECK(a.matched_length_s == b.matched_length_s);
}

TEST_CASE("splitting a TP segment adds a TP and keeps DLP") {
    const std::vector<Annotation> annotations = {{"A", 0.0, 100.0}};
    const std::vector<Segment> whole = {{"A", 10.0, 90.0, 0.1}};
    const std::vector<Segment> split = {{"A", 10.0, 40.0, 0.1}, {"A", 40.0, 90.0, 0.1}};
    const EvalCounts w = evaluate(whole, annotations);
    const EvalCounts s = evaluate(split, annotations);
    CHECK(s.tp == w.tp + 1);
    CHECK(s.matched_length_s == doctest::Approx(w.matched_length_s));
    CHECK(s.dlp() == doctest::Approx(w.dlp()));
}

TEST_CASE("a segment spanning two same-song annotations is one TP, two detections") {
    const std::vector<Annotation> annotations = {{"A", 0.0, 50.0}, {"A", 60.0, 100.0}};
    const std::vector<Segment> segs = {{"A", 40.0, 70.0, 0.1}};
    const EvalCounts c = evaluate(segs, annotations);
    CHECK(c.tp == 1);
    CHECK(c.detected_annotations == 2);
    CHECK(c.matched_length_s == doctest::Approx(20.0));
}

namespace {

CatalogManifest tiny_manifest() {
    // Concerts only need ids and group labels for aggregation; the file
    // paths never get touched here.
    CatalogManifest m;
    ConcertEntry c1;
    c1.concert_id = "c01";
    c1.audio_quality = AudioQuality::aq_a;
    c1.genre = Genre::rock;
    ConcertEntry c2;
    c2.concert_id = "c02";
    c2.audio_quality = AudioQuality::aq_b;
    c2.genre = Genre::rock;
    m.concerts = {c1, c2};
    return m;
}

} // namespace

TEST_CASE("aggregate pools numerators, not ratios") {
    EvalCounts a;
    a.total_annotations = 10;
    a.detected_annotations = 5;
    a.total_annotated_s = 100.0;
    EvalCounts b;
    b.total_annotations = 10;
    b.detected_annotations = 10;
    b.total_annotated_s = 100.0;
    const EvalReport r = aggregate({{"c01", a}, {"c02", b}}, tiny_manifest());
    CHECK(r.total.dap() == doctest::Approx(0.75)); // 15/20, not mean(0.5, 1.0)
    CHECK(r.by_quality.size() == 2);
    CHECK(r.by_genre.size() == 1);
    CHECK(r.by_genre.at("rock").dap() == doctest::Approx(0.75));

    SUBCASE("single concert aggregates to itself") {
        const EvalReport solo = aggregate({{"c01", a}}, tiny_manifest());
        CHECK(solo.total.dap() == a.dap());
        CHECK(solo.total.tp == a.tp);
    }
    SUBCASE("unknown concert id is rejected") {
        CHECK_THROWS_AS(aggregate({{"nope", a}}, tiny_manifest()), UnknownConcert);
    }
}

TEST_CASE("aggregation surfaces every audio-quality and genre group present") {
    CatalogManifest m;
    std::vector<std::pair<std::string, EvalCounts>> per_concert;
    static constexpr AudioQuality kQ[] = {AudioQuality::aq_a, AudioQuality::aq_b,
                                          AudioQuality::aq_c};
    static constexpr Genre kG[] = {Genre::pop, Genre::rock, Genre::indie, Genre::hiphop,
                                   Genre::electronic};
    for (int i = 0; i < 15; ++i) {
        ConcertEntry c;
        c.concert_id = "c" + std::to_string(i);
        c.audio_quality = kQ[i % 3];
        c.genre = kG[i % 5];
        m.concerts.push_back(c);
        EvalCounts counts;
        counts.tp = 1;
        counts.total_annotations = 2;
        counts.detected_annotations = 1;
        counts.total_annotated_s = 100.0;
        counts.matched_length_s = 50.0;
        per_concert.emplace_back(c.concert_id, counts);
    }
    std::sort(m.concerts.begin(), m.concerts.end(),
              [](const auto& a, const auto& b) { return a.concert_id < b.concert_id; });
    const EvalReport r = aggregate(per_concert, m);
    CHECK(r.by_quality.size() == 3);
    CHECK(r.by_genre.size() == 5);
    CHECK(r.total.tp == 15);
    CHECK(r.by_quality.at("AQ-A").total_annotations == 10);
    CHECK(r.by_genre.at("hiphop").tp == 3);
}

TEST_CASE("report csv lists concerts, groups, and total") {
    EvalCounts a;
    a.tp = 3;
    a.fp = 1;
    a.total_annotations = 4;
    a.detected_annotations = 3;
    a.total_annotated_s = 400.0;
    a.matched_length_s = 300.0;
    const EvalReport r = aggregate({{"c01", a}, {"c02", a}}, tiny_manifest());
    const std::string csv = report_csv(r);
    CHECK(csv.find("concert_id,group,TP,FP,DAP,DLP,TA,TL") == 0);
    CHECK(csv.find("c01,-,3,1,0.75,0.75,4,400") != std::string::npos);
    CHECK(csv.find("-,AQ-A,") != std::string::npos);
    CHECK(csv.find("-,rock,") != std::string::npos);
    CHECK(csv.find("-,total,6,2,0.75,0.75,8,800") != std::string::npos);
}
