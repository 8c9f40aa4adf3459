#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sli {

enum class AudioQuality { aq_a, aq_b, aq_c };
enum class Genre { pop, rock, indie, hiphop, electronic };

std::string to_string(AudioQuality q);
std::string to_string(Genre g);
AudioQuality parse_audio_quality(std::string_view s);
Genre parse_genre(std::string_view s);

struct ReferenceEntry {
    std::string track_id;
    std::filesystem::path feature_path;
    std::string artist;
    std::string title;
};

struct ConcertEntry {
    std::string concert_id;
    std::filesystem::path feature_path;
    std::filesystem::path annotation_path;
    AudioQuality audio_quality = AudioQuality::aq_a;
    Genre genre = Genre::pop;
};

struct CatalogManifest {
    std::vector<ReferenceEntry> references; // sorted by track_id
    std::vector<ConcertEntry> concerts;     // sorted by concert_id

    const ReferenceEntry* find_reference(std::string_view track_id) const;
    const ConcertEntry* find_concert(std::string_view concert_id) const;
};

// Line-oriented manifest: one record per line, tab-separated key=value
// fields, first field kind=reference|concert. Relative paths resolve
// against the manifest's directory. Loading is order-independent.
CatalogManifest load_manifest(const std::filesystem::path& path);

// Paths are written relative to base_dir when possible.
void write_manifest(const CatalogManifest& manifest, const std::filesystem::path& path,
                    const std::filesystem::path& base_dir);

struct Annotation {
    std::string song_id; // reference track_id or "unknown"
    double start_s = 0.0;
    double end_s = 0.0;
};

// CSV with required header song_id,start_s,end_s. Result is sorted by
// start and guaranteed overlap-free.
std::vector<Annotation> load_annotations(const std::filesystem::path& path);
void write_annotations(std::span<const Annotation> annotations,
                       const std::filesystem::path& path);

struct SetlistEntry {
    std::string song_id;
    std::string artist;
    std::string title;
    double start_s = 0.0;
    double end_s = 0.0;
    double distance = 0.0;
    bool accepted = true; // classifier verdict; true when no classifier ran
};

struct ConfigFingerprint {
    std::string backend;
    double window_s = 0.0;
    double hop_s = 0.0;
    std::string classifier_id = "none";
};

struct SetlistDocument {
    std::string concert_id;
    ConfigFingerprint config;
    std::vector<SetlistEntry> entries; // sorted by start, pairwise disjoint
};

// Throws OverlappingSegments / NegativeDuration if the entry list violates
// the document invariants.
void validate_setlist(const SetlistDocument& doc);

// Deterministic serialization: equal documents produce byte-identical
// files, and read(write(x)) == x.
void write_setlist_document(const SetlistDocument& doc, const std::filesystem::path& path);
SetlistDocument read_setlist_document(const std::filesystem::path& path);

bool operator==(const SetlistEntry& a, const SetlistEntry& b);
bool operator==(const SetlistDocument& a, const SetlistDocument& b);

} // namespace sli
