#include "sli/catalog.hpp"

#include "sli/errors.hpp"
#include "sli/textio.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace sli {

std::string to_string(AudioQuality q) {
    switch (q) {
    case AudioQuality::aq_a: return "AQ-A";
    case AudioQuality::aq_b: return "AQ-B";
    case AudioQuality::aq_c: return "AQ-C";
    }
    return "AQ-A";
}

std::string to_string(Genre g) {
    switch (g) {
    case Genre::pop: return "pop";
    case Genre::rock: return "rock";
    case Genre::indie: return "indie";
    case Genre::hiphop: return "hiphop";
    case Genre::electronic: return "electronic";
    }
    return "pop";
}

AudioQuality parse_audio_quality(std::string_view s) {
    if (s == "AQ-A") return AudioQuality::aq_a;
    if (s == "AQ-B") return AudioQuality::aq_b;
    if (s == "AQ-C") return AudioQuality::aq_c;
    throw UnknownEnumValue("audio quality '" + std::string(s) +
                           "' (valid: AQ-A, AQ-B, AQ-C)");
}

Genre parse_genre(std::string_view s) {
    if (s == "pop") return Genre::pop;
    if (s == "rock") return Genre::rock;
    if (s == "indie") return Genre::indie;
    if (s == "hiphop") return Genre::hiphop;
    if (s == "electronic") return Genre::electronic;
    throw UnknownEnumValue("genre '" + std::string(s) +
                           "' (valid: pop, rock, indie, hiphop, electronic)");
}

const ReferenceEntry* CatalogManifest::find_reference(std::string_view track_id) const {
    const auto it = std::lower_bound(references.begin(), references.end(), track_id,
                                     [](const ReferenceEntry& e, std::string_view id) {
                                         return e.track_id < id;
                                     });
    if (it != references.end() && it->track_id == track_id)
        return &*it;
    return nullptr;
}

const ConcertEntry* CatalogManifest::find_concert(std::string_view concert_id) const {
    const auto it = std::lower_bound(concerts.begin(), concerts.end(), concert_id,
                                     [](const ConcertEntry& e, std::string_view id) {
                                         return e.concert_id < id;
                                     });
    if (it != concerts.end() && it->concert_id == concert_id)
        return &*it;
    return nullptr;
}

namespace {

using FieldMap = std::vector<std::pair<std::string_view, std::string_view>>;

std::string_view field(const FieldMap& fields, std::string_view key, std::size_t line_no) {
    for (const auto& [k, v] : fields)
        if (k == key)
            return v;
    throw ParseError("manifest line " + std::to_string(line_no) + ": missing field '" +
                     std::string(key) + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, std::string_view rel) {
    std::filesystem::path p{std::string(rel)};
    if (p.is_relative())
        p = base / p;
    return p;
}

void require_file(const std::filesystem::path& p, std::size_t line_no) {
    if (!std::filesystem::exists(p))
        throw MissingFile("manifest line " + std::to_string(line_no) + ": " + p.string() +
                          " does not exist");
}

} // namespace

CatalogManifest load_manifest(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    const std::filesystem::path base = path.has_parent_path()
                                           ? path.parent_path()
                                           : std::filesystem::path(".");
    CatalogManifest out;
    std::size_t line_no = 0;
    for (const auto line : split_lines(text)) {
        ++line_no;
        if (line.empty() || line.front() == '#')
            continue;
        const FieldMap fields = split_fields(line);
        const std::string_view kind = field(fields, "kind", line_no);
        if (kind == "reference") {
            ReferenceEntry e;
            e.track_id = std::string(field(fields, "track_id", line_no));
            if (e.track_id.empty())
                throw ParseError("manifest line " + std::to_string(line_no) +
                                 ": empty track_id");
            e.feature_path = resolve(base, field(fields, "feature_path", line_no));
            e.artist = std::string(field(fields, "artist", line_no));
            e.title = std::string(field(fields, "title", line_no));
            require_file(e.feature_path, line_no);
            out.references.push_back(std::move(e));
        } else if (kind == "concert") {
            ConcertEntry e;
            e.concert_id = std::string(field(fields, "concert_id", line_no));
            if (e.concert_id.empty())
                throw ParseError("manifest line " + std::to_string(line_no) +
                                 ": empty concert_id");
            e.feature_path = resolve(base, field(fields, "feature_path", line_no));
            e.annotation_path = resolve(base, field(fields, "annotation_path", line_no));
            e.audio_quality = parse_audio_quality(field(fields, "audio_quality", line_no));
            e.genre = parse_genre(field(fields, "genre", line_no));
            require_file(e.feature_path, line_no);
            require_file(e.annotation_path, line_no);
            out.concerts.push_back(std::move(e));
        } else {
            throw ParseError("manifest line " + std::to_string(line_no) + ": unknown kind '" +
                             std::string(kind) + "'");
        }
    }

    std::sort(out.references.begin(), out.references.end(),
              [](const auto& a, const auto& b) { return a.track_id < b.track_id; });
    std::sort(out.concerts.begin(), out.concerts.end(),
              [](const auto& a, const auto& b) { return a.concert_id < b.concert_id; });

    for (std::size_t i = 1; i < out.references.size(); ++i)
        if (out.references[i].track_id == out.references[i - 1].track_id)
            throw DuplicateId("reference track_id '" + out.references[i].track_id + "'");
    for (std::size_t i = 1; i < out.concerts.size(); ++i)
        if (out.concerts[i].concert_id == out.concerts[i - 1].concert_id)
            throw DuplicateId("concert_id '" + out.concerts[i].concert_id + "'");
    return out;
}

namespace {

std::string relative_or_absolute(const std::filesystem::path& p,
                                 const std::filesystem::path& base) {
    std::error_code ec;
    const auto rel = std::filesystem::relative(p, base, ec);
    if (!ec && !rel.empty())
        return rel.generic_string();
    return p.generic_string();
}

} // namespace

void write_manifest(const CatalogManifest& manifest, const std::filesystem::path& path,
                    const std::filesystem::path& base_dir) {
    std::ostringstream ss;
    for (const auto& r : manifest.references) {
        ss << "kind=reference\ttrack_id=" << r.track_id
           << "\tfeature_path=" << relative_or_absolute(r.feature_path, base_dir)
           << "\tartist=" << r.artist << "\ttitle=" << r.title << "\n";
    }
    for (const auto& c : manifest.concerts) {
        ss << "kind=concert\tconcert_id=" << c.concert_id
           << "\tfeature_path=" << relative_or_absolute(c.feature_path, base_dir)
           << "\tannotation_path=" << relative_or_absolute(c.annotation_path, base_dir)
           << "\taudio_quality=" << to_string(c.audio_quality)
           << "\tgenre=" << to_string(c.genre) << "\n";
    }
    write_text_file(path, ss.str());
}

std::vector<Annotation> load_annotations(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    const auto lines = split_lines(text);
    if (lines.empty() || lines[0] != "song_id,start_s,end_s")
        throw ParseError(path.string() + ": expected header song_id,start_s,end_s");

    std::vector<Annotation> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty())
            continue;
        const auto cells = split(lines[i], ',');
        if (cells.size() != 3)
            throw ParseError(path.string() + ": row " + std::to_string(i) +
                             " needs 3 cells");
        Annotation a;
        a.song_id = std::string(cells[0]);
        a.start_s = parse_double(cells[1]);
        a.end_s = parse_double(cells[2]);
        if (a.start_s < 0.0 || !(a.start_s < a.end_s))
            throw NegativeDuration(path.string() + ": annotation '" + a.song_id + "' [" +
                                   format_double(a.start_s) + ", " + format_double(a.end_s) +
                                   ")");
        out.push_back(std::move(a));
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i].start_s < out[i - 1].end_s)
            throw OverlappingAnnotations(path.string() + ": '" + out[i - 1].song_id +
                                         "' and '" + out[i].song_id + "' overlap");
    }
    return out;
}

void write_annotations(std::span<const Annotation> annotations,
                       const std::filesystem::path& path) {
    std::ostringstream ss;
    ss << "song_id,start_s,end_s\n";
    for (const auto& a : annotations)
        ss << a.song_id << ',' << format_double(a.start_s) << ',' << format_double(a.end_s)
           << '\n';
    write_text_file(path, ss.str());
}

void validate_setlist(const SetlistDocument& doc) {
    for (std::size_t i = 0; i < doc.entries.size(); ++i) {
        const auto& e = doc.entries[i];
        if (!(e.start_s < e.end_s))
            throw NegativeDuration("setlist entry '" + e.song_id + "' has no duration");
        if (i > 0) {
            if (e.start_s < doc.entries[i - 1].start_s)
                throw OverlappingSegments("setlist entries not sorted by start");
            if (e.start_s < doc.entries[i - 1].end_s)
                throw OverlappingSegments("setlist entries '" + doc.entries[i - 1].song_id +
                                          "' and '" + e.song_id + "' overlap");
        }
    }
}

void write_setlist_document(const SetlistDocument& doc, const std::filesystem::path& path) {
    validate_setlist(doc);
    std::ostringstream ss;
    ss << "setlist_version=1\n";
    ss << "concert_id=" << doc.concert_id << "\n";
    ss << "backend=" << doc.config.backend << "\n";
    ss << "window_s=" << format_double(doc.config.window_s) << "\n";
    ss << "hop_s=" << format_double(doc.config.hop_s) << "\n";
    ss << "classifier=" << doc.config.classifier_id << "\n";
    ss << "n_entries=" << doc.entries.size() << "\n";
    for (const auto& e : doc.entries) {
        ss << "entry\tsong_id=" << e.song_id << "\tartist=" << e.artist
           << "\ttitle=" << e.title << "\tstart_s=" << format_double(e.start_s)
           << "\tend_s=" << format_double(e.end_s)
           << "\tdistance=" << format_double(e.distance)
           << "\taccepted=" << (e.accepted ? 1 : 0) << "\n";
    }
    write_text_file(path, ss.str());
}

SetlistDocument read_setlist_document(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    SetlistDocument doc;
    std::size_t line_no = 0;
    for (const auto line : split_lines(text)) {
        ++line_no;
        if (line.empty())
            continue;
        if (line.rfind("entry\t", 0) == 0) {
            const FieldMap fields = split_fields(line.substr(6));
            SetlistEntry e;
            e.song_id = std::string(field(fields, "song_id", line_no));
            e.artist = std::string(field(fields, "artist", line_no));
            e.title = std::string(field(fields, "title", line_no));
            e.start_s = parse_double(field(fields, "start_s", line_no));
            e.end_s = parse_double(field(fields, "end_s", line_no));
            e.distance = parse_double(field(fields, "distance", line_no));
            e.accepted = parse_int(field(fields, "accepted", line_no)) != 0;
            doc.entries.push_back(std::move(e));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(path.string() + " line " + std::to_string(line_no));
        const std::string_view key = line.substr(0, eq);
        const std::string_view value = line.substr(eq + 1);
        if (key == "setlist_version") {
            if (value != "1")
                throw VersionUnsupported("setlist version " + std::string(value));
        } else if (key == "concert_id") {
            doc.concert_id = std::string(value);
        } else if (key == "backend") {
            doc.config.backend = std::string(value);
        } else if (key == "window_s") {
            doc.config.window_s = parse_double(value);
        } else if (key == "hop_s") {
            doc.config.hop_s = parse_double(value);
        } else if (key == "classifier") {
            doc.config.classifier_id = std::string(value);
        } else if (key == "n_entries") {
            // redundant; length checked below
        } else {
            throw ParseError(path.string() + ": unknown key '" + std::string(key) + "'");
        }
    }
    validate_setlist(doc);
    return doc;
}

bool operator==(const SetlistEntry& a, const SetlistEntry& b) {
    return a.song_id == b.song_id && a.artist == b.artist && a.title == b.title &&
           a.start_s == b.start_s && a.end_s == b.end_s && a.distance == b.distance &&
           a.accepted == b.accepted;
}

bool operator==(const SetlistDocument& a, const SetlistDocument& b) {
    return a.concert_id == b.concert_id && a.config.backend == b.config.backend &&
           a.config.window_s == b.config.window_s && a.config.hop_s == b.config.hop_s &&
           a.config.classifier_id == b.config.classifier_id && a.entries == b.entries;
}

} // namespace sli
