#include "sli/synth.hpp"

#include "sli/errors.hpp"
#include "sli/feature_io.hpp"
#include "sli/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace sli {

void validate_synth_config(const SynthConfig& cfg) {
    const auto ordered = [](const auto& r) { return r.first <= r.second; };
    if (!ordered(cfg.ref_duration_range_s) || !ordered(cfg.songs_per_concert_range) ||
        !ordered(cfg.gap_range_s) || !ordered(cfg.stretch_range))
        throw ValueOutOfRange("synth ranges must be ordered (min <= max)");
    const auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(cfg.transpose_prob) || !prob(cfg.stretch_prob) || !prob(cfg.truncate_prob) ||
        !prob(cfg.noise_level))
        throw ValueOutOfRange("synth probabilities must lie in [0, 1]");
    if (cfg.n_references < 1 || cfg.n_distractors < 0)
        throw ValueOutOfRange("need at least one reference");
    if (!(cfg.frame_rate_hz > 0.0))
        throw ValueOutOfRange("frame rate must be positive");
}

namespace {

// Chord templates over 12 bins: root plus stacked intervals, with
// decreasing emphasis.
std::array<float, kPcpBins> make_chord(Rng& rng) {
    static constexpr int kShapes[4][3] = {
        {0, 4, 7},  // major
        {0, 3, 7},  // minor
        {0, 4, 10}, // dominant-ish
        {0, 5, 7},  // suspended
    };
    const int root = static_cast<int>(rng.uniform_int(0, 11));
    const int shape = static_cast<int>(rng.uniform_int(0, 3));
    std::array<float, kPcpBins> chord{};
    const double emphasis[3] = {0.9, 0.55, 0.7};
    for (int n = 0; n < 3; ++n) {
        const int bin = (root + kShapes[shape][n]) % kPcpBins;
        chord[bin] = static_cast<float>(emphasis[n] * rng.uniform(0.8, 1.0));
    }
    return chord;
}

} // namespace

PcpMatrix synth_reference(std::uint64_t seed, double duration_s, double frame_rate_hz) {
    if (duration_s < 30.0)
        throw DurationTooShort("synthetic reference needs >= 30 s, got " +
                               std::to_string(duration_s));
    Rng rng(seed);
    const std::size_t n_frames = static_cast<std::size_t>(
        std::llround(duration_s * frame_rate_hz));

    const int n_chords = static_cast<int>(rng.uniform_int(4, 8));
    std::vector<std::array<float, kPcpBins>> chords(n_chords);
    for (auto& c : chords)
        c = make_chord(rng);
    const double hold_s = rng.uniform(1.5, 3.0);
    const std::size_t hold_frames =
        std::max<std::size_t>(2, static_cast<std::size_t>(hold_s * frame_rate_hz));
    const std::size_t fade_frames = std::max<std::size_t>(1, hold_frames / 6);

    PcpMatrix out;
    out.n_frames = n_frames;
    out.frame_rate_hz = frame_rate_hz;
    out.values.resize(n_frames * kPcpBins);
    for (std::size_t f = 0; f < n_frames; ++f) {
        const std::size_t slot = f / hold_frames;
        const std::size_t pos = f % hold_frames;
        const auto& cur = chords[slot % n_chords];
        const auto& next = chords[(slot + 1) % n_chords];
        // crossfade into the next chord at the end of each hold
        double w = 0.0;
        if (pos + fade_frames >= hold_frames)
            w = static_cast<double>(pos + fade_frames - hold_frames + 1) /
                static_cast<double>(fade_frames + 1);
        float* dst = out.frame(f);
        for (int c = 0; c < kPcpBins; ++c) {
            double v = (1.0 - w) * cur[c] + w * next[c];
            v += rng.uniform(0.0, 0.04);
            dst[c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

std::pair<PcpMatrix, FeatureMeta> synth_reference_with_meta(std::uint64_t seed,
                                                            double duration_s,
                                                            double frame_rate_hz) {
    PcpMatrix pcp = synth_reference(seed, duration_s, frame_rate_hz);
    FeatureMeta meta;
    meta.track_id = "synth-" + std::to_string(seed);
    meta.duration_s = pcp.duration_s();
    meta.source_kind = SourceKind::reference;
    return {std::move(pcp), std::move(meta)};
}

namespace {

std::array<double, kPcpBins> global_mean(const PcpMatrix& m) {
    std::array<double, kPcpBins> mean{};
    for (std::size_t f = 0; f < m.n_frames; ++f) {
        const float* src = m.frame(f);
        for (int c = 0; c < kPcpBins; ++c)
            mean[c] += src[c];
    }
    for (auto& v : mean)
        v /= static_cast<double>(m.n_frames);
    return mean;
}

double cosine_dist(const std::array<double, kPcpBins>& a,
                   const std::array<double, kPcpBins>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int c = 0; c < kPcpBins; ++c) {
        dot += a[c] * b[c];
        na += a[c] * a[c];
        nb += b[c] * b[c];
    }
    if (na == 0.0 || nb == 0.0)
        return 1.0;
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string indexed_id(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%03d", prefix, i + 1);
    return buf;
}

} // namespace

SynthCatalog synth_catalog(const SynthConfig& cfg) {
    validate_synth_config(cfg);
    Rng rng(derive_seed(cfg.seed, 1));

    SynthCatalog cat;
    cat.n_playable = cfg.n_references;
    const int total = cfg.n_references + cfg.n_distractors;
    std::vector<std::array<double, kPcpBins>> means;
    for (int i = 0; i < total; ++i) {
        const double duration =
            rng.uniform(cfg.ref_duration_range_s.first, cfg.ref_duration_range_s.second);
        std::uint64_t ref_seed = rng.next_u64();
        for (int attempt = 0;; ++attempt) {
            PcpMatrix pcp = synth_reference(ref_seed, duration, cfg.frame_rate_hz);
            const auto mean = global_mean(pcp);
            bool distinct = true;
            for (const auto& other : means) {
                if (cosine_dist(mean, other) < 0.05) {
                    distinct = false;
                    break;
                }
            }
            if (distinct) {
                means.push_back(mean);
                cat.pcps.push_back(std::move(pcp));
                break;
            }
            if (attempt > 200)
                throw CatalogTooSmall("cannot synthesize " + std::to_string(total) +
                                      " mutually distinct references");
            ref_seed = derive_seed(ref_seed, static_cast<std::uint64_t>(attempt) + 7);
        }
        cat.ids.push_back(indexed_id(i < cfg.n_references ? "ref" : "dis",
                                     i < cfg.n_references ? i : i - cfg.n_references));
    }
    return cat;
}

SynthConcert synth_concert(const SynthCatalog& refs, const SynthConfig& cfg,
                           std::uint64_t seed) {
    validate_synth_config(cfg);
    if (refs.n_playable < 1)
        throw CatalogTooSmall("no playable references");
    Rng rng(seed);

    const int max_songs = std::min(cfg.songs_per_concert_range.second, refs.n_playable);
    const int min_songs = std::min(cfg.songs_per_concert_range.first, max_songs);
    const int k = static_cast<int>(rng.uniform_int(min_songs, max_songs));
    if (k < 1)
        throw CatalogTooSmall("concert needs at least one song");

    // draw without replacement
    std::vector<std::size_t> pool(static_cast<std::size_t>(refs.n_playable));
    for (std::size_t i = 0; i < pool.size(); ++i)
        pool[i] = i;
    rng.shuffle(pool);
    pool.resize(static_cast<std::size_t>(k));

    const double rate = cfg.frame_rate_hz;
    SynthConcert out;
    out.pcp.frame_rate_hz = rate;
    std::vector<float>& timeline = out.pcp.values;

    const double gap_amp = 0.2 + 0.6 * cfg.noise_level;
    std::size_t cursor = 0;
    for (int s = 0; s < k; ++s) {
        if (s > 0) {
            const double gap_s = rng.uniform(cfg.gap_range_s.first, cfg.gap_range_s.second);
            const std::size_t gap_frames =
                static_cast<std::size_t>(std::llround(gap_s * rate));
            for (std::size_t f = 0; f < gap_frames * kPcpBins; ++f)
                timeline.push_back(static_cast<float>(rng.uniform(0.0, gap_amp)));
            cursor += gap_frames;
        }

        PcpMatrix song = refs.pcps[pool[static_cast<std::size_t>(s)]];
        if (rng.bernoulli(cfg.transpose_prob))
            song = rotate_pitch(song, static_cast<int>(rng.uniform_int(1, 11)));
        if (rng.bernoulli(cfg.stretch_prob))
            song = time_stretch(song, rng.uniform(cfg.stretch_range.first,
                                                  cfg.stretch_range.second));
        if (rng.bernoulli(cfg.truncate_prob)) {
            const double keep = rng.uniform(0.6, 1.0);
            const std::size_t keep_frames = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(keep *
                                                         static_cast<double>(song.n_frames))));
            song.values.resize(keep_frames * kPcpBins);
            song.n_frames = keep_frames;
        }

        // overlay performance noise
        if (cfg.noise_level > 0.0) {
            for (auto& v : song.values) {
                const double noisy =
                    v + cfg.noise_level * (rng.next_double01() - 0.5);
                v = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
            }
        }

        Annotation a;
        a.song_id = refs.ids[pool[static_cast<std::size_t>(s)]];
        a.start_s = frame_to_seconds(cursor, rate);
        a.end_s = frame_to_seconds(cursor + song.n_frames, rate);
        out.annotations.push_back(std::move(a));

        timeline.insert(timeline.end(), song.values.begin(), song.values.end());
        cursor += song.n_frames;
    }
    out.pcp.n_frames = cursor;
    return out;
}

void synth_dataset(const SynthConfig& cfg, int n_concerts,
                   const std::filesystem::path& out_dir) {
    validate_synth_config(cfg);
    if (n_concerts < 1)
        throw ValueOutOfRange("need at least one concert");

    namespace fs = std::filesystem;
    fs::create_directories(out_dir / "refs");
    fs::create_directories(out_dir / "concerts");
    fs::create_directories(out_dir / "annotations");

    const SynthCatalog cat = synth_catalog(cfg);
    CatalogManifest manifest;
    for (std::size_t i = 0; i < cat.ids.size(); ++i) {
        ReferenceEntry e;
        e.track_id = cat.ids[i];
        e.feature_path = out_dir / "refs" / (cat.ids[i] + ".slpc");
        e.artist = "Synthetic";
        e.title = cat.ids[i];
        FeatureMeta meta{cat.ids[i], cat.pcps[i].duration_s(), SourceKind::reference};
        write_feature_file(cat.pcps[i], meta, std::nullopt, e.feature_path);
        manifest.references.push_back(std::move(e));
    }

    static constexpr AudioQuality kQualities[] = {AudioQuality::aq_a, AudioQuality::aq_b,
                                                  AudioQuality::aq_c};
    static constexpr Genre kGenres[] = {Genre::pop, Genre::rock, Genre::indie, Genre::hiphop,
                                        Genre::electronic};
    for (int i = 0; i < n_concerts; ++i) {
        const std::string id = indexed_id("concert", i);
        const SynthConcert concert =
            synth_concert(cat, cfg, derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(i)));
        ConcertEntry e;
        e.concert_id = id;
        e.feature_path = out_dir / "concerts" / (id + ".slpc");
        e.annotation_path = out_dir / "annotations" / (id + ".csv");
        e.audio_quality = kQualities[i % 3];
        e.genre = kGenres[i % 5];
        FeatureMeta meta{id, concert.pcp.duration_s(), SourceKind::concert};
        write_feature_file(concert.pcp, meta, std::nullopt, e.feature_path);
        write_annotations(concert.annotations, e.annotation_path);
        manifest.concerts.push_back(std::move(e));
    }
    write_manifest(manifest, out_dir / "manifest.txt", out_dir);
}

} // namespace sli
