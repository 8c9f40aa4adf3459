#include "doctest.h"

#include "sli/errors.hpp"
#include "sli/feature_io.hpp"
#include "sli/pcp.hpp"
#include "sli/rng.hpp"
#include "sli/textio.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

using namespace sli;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "sli_test_features";
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("feature file round-trip is bit-exact") {
    Rng rng(42);
    const fs::path path = temp_dir() / "roundtrip.slpc";
    for (int rep = 0; rep < 5; ++rep) {
        const PcpMatrix m = oracles::random_pcp(rng, 1 + rng.uniform_int(1, 400), 10.0);
        std::optional<BeatGrid> beats;
        if (rep % 2 == 0) {
            BeatGrid g;
            double t = 0.0;
            while (t < m.duration_s()) {
                g.beat_times_s.push_back(t);
                t += 0.47;
            }
            beats = g;
        }
        FeatureMeta meta{"t", m.duration_s(), SourceKind::reference};
        write_feature_file(m, meta, beats, path);
        const FeatureFile back = parse_feature_file(path);
        CHECK(back.pcp.values == m.values);
        CHECK(back.pcp.frame_rate_hz == m.frame_rate_hz);
        CHECK(back.beats.has_value() == beats.has_value());
        if (beats)
            CHECK(back.beats->beat_times_s == beats->beat_times_s);
    }
}

TEST_CASE("feature file layout: 1x12 zero matrix writes header plus 48 bytes") {
    const PcpMatrix m = make_pcp_matrix(std::vector<float>(12, 0.0f), kDefaultFrameRateHz);
    const fs::path path = temp_dir() / "tiny.slpc";
    write_feature_file(m, FeatureMeta{}, std::nullopt, path);
    // magic(4) + version(4) + n_frames(4) + n_bins(4) + rate(8) + has_beats(1)
    CHECK(fs::file_size(path) == 25 + 48);
}

TEST_CASE("parse errors") {
    const fs::path dir = temp_dir();

    SUBCASE("bad magic") {
        write_text_file(dir / "junk.slpc", "not a feature file at all");
        CHECK_THROWS_AS(parse_feature_file(dir / "junk.slpc"), BadMagic);
    }
    SUBCASE("unsupported version") {
        std::string buf = "SLPC";
        const std::uint32_t version = 9, frames = 1, bins = 12;
        buf.append(reinterpret_cast<const char*>(&version), 4);
        buf.append(reinterpret_cast<const char*>(&frames), 4);
        buf.append(reinterpret_cast<const char*>(&bins), 4);
        write_text_file(dir / "v9.slpc", buf);
        CHECK_THROWS_AS(parse_feature_file(dir / "v9.slpc"), VersionUnsupported);
    }
    SUBCASE("declared shape larger than payload") {
        const PcpMatrix m = make_pcp_matrix(std::vector<float>(9 * 12, 0.5f), 10.0);
        write_feature_file(m, FeatureMeta{}, std::nullopt, dir / "short.slpc");
        // bump the declared frame count to 10 without adding payload
        std::fstream f(dir / "short.slpc",
                       std::ios::binary | std::ios::in | std::ios::out);
        const std::uint32_t declared = 10;
        f.seekp(8);
        f.write(reinterpret_cast<const char*>(&declared), 4);
        f.close();
        CHECK_THROWS_AS(parse_feature_file(dir / "short.slpc"), ShapeMismatch);
    }
    SUBCASE("zero frames") {
        std::string buf = "SLPC";
        const std::uint32_t version = 1, frames = 0, bins = 12;
        const double rate = 10.0;
        const std::uint8_t has_beats = 0;
        buf.append(reinterpret_cast<const char*>(&version), 4);
        buf.append(reinterpret_cast<const char*>(&frames), 4);
        buf.append(reinterpret_cast<const char*>(&bins), 4);
        buf.append(reinterpret_cast<const char*>(&rate), 8);
        buf.append(reinterpret_cast<const char*>(&has_beats), 1);
        write_text_file(dir / "empty.slpc", buf);
        CHECK_THROWS_AS(parse_feature_file(dir / "empty.slpc"), EmptyFeature);
    }
}

TEST_CASE("value validation clamps tiny violations and rejects real ones") {
    std::vector<float> values(12, 0.5f);
    values[0] = 1.0f + 5e-7f;
    const PcpMatrix m = make_pcp_matrix(values, 10.0);
    CHECK(m.values[0] == 1.0f);

    values[0] = 1.0f + 1e-3f;
    CHECK_THROWS_AS(make_pcp_matrix(values, 10.0), ValueOutOfRange);

    values[0] = std::nanf("");
    CHECK_THROWS_AS(make_pcp_matrix(values, 10.0), NonFiniteValue);

    PcpMatrix direct;
    direct.n_frames = 1;
    direct.frame_rate_hz = 10.0;
    direct.values.assign(12, 0.5f);
    direct.values[3] = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(
        write_feature_file(direct, FeatureMeta{}, std::nullopt, temp_dir() / "nan.slpc"),
        NonFiniteValue);
}

TEST_CASE("frame/time conversions") {
    CHECK(frame_to_seconds(0, 10.7666) == 0.0);
    CHECK(frame_to_seconds(10766, 10.7666) == doctest::Approx(999.944).epsilon(1e-5));
    CHECK(frame_to_seconds(1, 44100.0 / 4096.0) == doctest::Approx(4096.0 / 44100.0));
    CHECK(seconds_to_frame(0.0, 10.0) == 0);
    CHECK(seconds_to_frame(1.25, 10.0) == 12);
}

TEST_CASE("rotate_pitch") {
    Rng rng(7);
    const PcpMatrix m = oracles::random_pcp(rng, 50, 10.0);

    SUBCASE("k=0 is the identity") { CHECK(rotate_pitch(m, 0).values == m.values); }

    SUBCASE("rotations compose to a full cycle") {
        const PcpMatrix twice = rotate_pitch(rotate_pitch(m, 3), 3);
        CHECK(rotate_pitch(twice, 6).values == m.values);
    }

    SUBCASE("one-hot frame shifts by k bins") {
        std::vector<float> values(12, 0.0f);
        values[0] = 1.0f;
        const PcpMatrix hot = make_pcp_matrix(values, 10.0);
        const PcpMatrix rot = rotate_pitch(hot, 1);
        CHECK(rot.values[1] == 1.0f);
        CHECK(rot.values[0] == 0.0f);
    }

    SUBCASE("rows are permuted, never altered") {
        const PcpMatrix rot = rotate_pitch(m, 5);
        for (std::size_t f = 0; f < m.n_frames; ++f) {
            std::vector<float> a(m.frame(f), m.frame(f) + kPcpBins);
            std::vector<float> b(rot.frame(f), rot.frame(f) + kPcpBins);
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            CHECK(a == b); // same multiset, so row sums are preserved
            double sa = 0.0, sb = 0.0;
            for (int c = 0; c < kPcpBins; ++c) {
                sa += m.frame(f)[c];
                sb += rot.frame(f)[c];
            }
            CHECK(sa == doctest::Approx(sb).epsilon(1e-12));
        }
    }
}

TEST_CASE("time_stretch") {
    Rng rng(11);
    const PcpMatrix m = oracles::random_pcp(rng, 100, 10.0);

    CHECK(time_stretch(m, 1.0).values == m.values);
    CHECK(time_stretch(m, 2.0).n_frames == 200);
    CHECK_THROWS_AS(time_stretch(m, 0.4), FactorOutOfRange);
    CHECK_THROWS_AS(time_stretch(m, 2.5), FactorOutOfRange);

    SUBCASE("constant input stays constant at any factor") {
        const PcpMatrix c = make_pcp_matrix(std::vector<float>(40 * 12, 0.25f), 10.0);
        for (const double f : {0.5, 0.77, 1.3, 2.0}) {
            const PcpMatrix s = time_stretch(c, f);
            for (const float v : s.values)
                CHECK(v == 0.25f);
        }
    }

    SUBCASE("linear interpolation never overshoots a column's range") {
        for (const double f : {0.5, 0.8, 1.25, 2.0}) {
            const PcpMatrix s = time_stretch(m, f);
            for (int c = 0; c < kPcpBins; ++c) {
                float lo = 1.0f, hi = 0.0f;
                for (std::size_t i = 0; i < m.n_frames; ++i) {
                    lo = std::min(lo, m.frame(i)[c]);
                    hi = std::max(hi, m.frame(i)[c]);
                }
                for (std::size_t i = 0; i < s.n_frames; ++i) {
                    CHECK(s.frame(i)[c] >= lo - 1e-6f);
                    CHECK(s.frame(i)[c] <= hi + 1e-6f);
                }
            }
        }
    }
}

TEST_CASE("csv ingestion") {
    const fs::path dir = temp_dir();
    std::string csv = "frame,b0,b1,b2,b3,b4,b5,b6,b7,b8,b9,b10,b11\n";
    csv += "0,0.1,0,0,0,0,0,0,0,0,0,0,0.9\n";
    csv += "1,0.2,0,0,0,0,0,0,0,0,0,0,0.8\n";
    write_text_file(dir / "feat.csv", csv);
    const PcpMatrix m = parse_feature_csv(dir / "feat.csv", 10.0);
    CHECK(m.n_frames == 2);
    CHECK(m.frame(0)[0] == 0.1f);
    CHECK(m.frame(1)[11] == 0.8f);

    write_text_file(dir / "bad.csv", "frames,b0\n");
    CHECK_THROWS_AS(parse_feature_csv(dir / "bad.csv", 10.0), ParseError);
}
