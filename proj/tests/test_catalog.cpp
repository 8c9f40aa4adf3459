#include "doctest.h"

#include "sli/catalog.hpp"
#include "sli/errors.hpp"
#include "sli/feature_io.hpp"
#include "sli/textio.hpp"

#include <filesystem>

using namespace sli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void touch_feature(const fs::path& p) {
    const PcpMatrix m = make_pcp_matrix(std::vector<float>(12 * 400, 0.5f), 10.0);
    write_feature_file(m, FeatureMeta{}, std::nullopt, p);
}

std::string manifest_lines(bool duplicate, const char* genre) {
    std::string s;
    s += "kind=reference\ttrack_id=r01\tfeature_path=r01.slpc\tartist=Band A\ttitle=Song "
         "One\n";
    s += "kind=reference\ttrack_id=r02\tfeature_path=r02.slpc\tartist=Band B\ttitle=Song "
         "Two\n";
    if (duplicate)
        s += "kind=reference\ttrack_id=r01\tfeature_path=r02.slpc\tartist=X\ttitle=Y\n";
    s += "kind=concert\tconcert_id=c01\tfeature_path=c01.slpc\tannotation_path=c01.csv"
         "\taudio_quality=AQ-B\tgenre=";
    s += genre;
    s += "\n";
    return s;
}

fs::path write_catalog(const char* name, bool duplicate = false, const char* genre = "rock") {
    const fs::path dir = fresh_dir(name);
    touch_feature(dir / "r01.slpc");
    touch_feature(dir / "r02.slpc");
    touch_feature(dir / "c01.slpc");
    write_text_file(dir / "c01.csv", "song_id,start_s,end_s\nr01,0,40\n");
    write_text_file(dir / "manifest.txt", manifest_lines(duplicate, genre));
    return dir / "manifest.txt";
}

} // namespace

TEST_CASE("manifest loads and resolves paths") {
    const CatalogManifest m = load_manifest(write_catalog("sli_cat_ok"));
    REQUIRE(m.references.size() == 2);
    REQUIRE(m.concerts.size() == 1);
    CHECK(m.references[0].track_id == "r01");
    CHECK(m.references[0].artist == "Band A");
    CHECK(fs::exists(m.references[0].feature_path));
    CHECK(m.concerts[0].audio_quality == AudioQuality::aq_b);
    CHECK(m.concerts[0].genre == Genre::rock);
    CHECK(m.find_reference("r02") != nullptr);
    CHECK(m.find_reference("zzz") == nullptr);
}

TEST_CASE("manifest is order-independent") {
    const fs::path path = write_catalog("sli_cat_perm");
    const CatalogManifest a = load_manifest(path);

    // permute the lines
    const std::string text = read_text_file(path);
    auto lines = split_lines(text);
    std::string reversed;
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        if (it->empty())
            continue;
        reversed += std::string(*it) + "\n";
    }
    write_text_file(path, reversed);
    const CatalogManifest b = load_manifest(path);

    REQUIRE(a.references.size() == b.references.size());
    for (std::size_t i = 0; i < a.references.size(); ++i)
        CHECK(a.references[i].track_id == b.references[i].track_id);
}

TEST_CASE("manifest rejections") {
    CHECK_THROWS_AS(load_manifest(write_catalog("sli_cat_dup", true)), DuplicateId);
    CHECK_THROWS_WITH_AS(load_manifest(write_catalog("sli_cat_genre", false, "jazz")),
                         doctest::Contains("pop, rock, indie, hiphop, electronic"),
                         UnknownEnumValue);

    const fs::path path = write_catalog("sli_cat_missing");
    fs::remove(path.parent_path() / "r02.slpc");
    CHECK_THROWS_AS(load_manifest(path), MissingFile);
}

TEST_CASE("manifest write/load round trip") {
    const fs::path manifest_path = write_catalog("sli_cat_rt");
    const CatalogManifest a = load_manifest(manifest_path);
    const fs::path copy = manifest_path.parent_path() / "copy.txt";
    write_manifest(a, copy, manifest_path.parent_path());
    const CatalogManifest b = load_manifest(copy);
    REQUIRE(b.references.size() == a.references.size());
    CHECK(b.references[1].title == a.references[1].title);
    CHECK(b.concerts[0].genre == a.concerts[0].genre);
}

TEST_CASE("annotations") {
    const fs::path dir = fresh_dir("sli_annot");

    SUBCASE("rows load sorted") {
        write_text_file(dir / "a.csv", "song_id,start_s,end_s\nB,120,200\nA,0,100\n");
        const auto rows = load_annotations(dir / "a.csv");
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].song_id == "A");
        CHECK(rows[1].start_s == 120.0);
    }
    SUBCASE("overlap rejected") {
        write_text_file(dir / "b.csv", "song_id,start_s,end_s\nA,0,100\nB,50,150\n");
        CHECK_THROWS_AS(load_annotations(dir / "b.csv"), OverlappingAnnotations);
    }
    SUBCASE("zero length rejected") {
        write_text_file(dir / "c.csv", "song_id,start_s,end_s\nA,100,100\n");
        CHECK_THROWS_AS(load_annotations(dir / "c.csv"), NegativeDuration);
    }
    SUBCASE("header required") {
        write_text_file(dir / "d.csv", "A,0,100\n");
        CHECK_THROWS_AS(load_annotations(dir / "d.csv"), ParseError);
    }
    SUBCASE("write/load round trip") {
        const std::vector<Annotation> rows = {{"A", 0.0, 100.5}, {"B", 120.25, 200.0}};
        write_annotations(rows, dir / "rt.csv");
        const auto back = load_annotations(dir / "rt.csv");
        REQUIRE(back.size() == 2);
        CHECK(back[0].end_s == 100.5);
        CHECK(back[1].start_s == 120.25);
    }
}

TEST_CASE("setlist document serialization") {
    const fs::path dir = fresh_dir("sli_setlist");
    SetlistDocument doc;
    doc.concert_id = "c01";
    doc.config = {"qmax", 120.0, 30.0, "none"};
    doc.entries.push_back({"r01", "Band A", "Song One", 0.0, 118.25, 0.03125, true});
    doc.entries.push_back({"r02", "Band B", "Song Two", 130.0, 260.125, 0.5, false});

    SUBCASE("round trip and bit-exact reserialization") {
        write_setlist_document(doc, dir / "c01.setlist");
        const SetlistDocument back = read_setlist_document(dir / "c01.setlist");
        CHECK(back == doc);
        write_setlist_document(back, dir / "again.setlist");
        CHECK(read_text_file(dir / "c01.setlist") == read_text_file(dir / "again.setlist"));
    }
    SUBCASE("empty entry list is valid") {
        doc.entries.clear();
        write_setlist_document(doc, dir / "empty.setlist");
        CHECK(read_setlist_document(dir / "empty.setlist").entries.empty());
    }
    SUBCASE("overlap rejected before write") {
        doc.entries[1].start_s = 60.0;
        CHECK_THROWS_AS(write_setlist_document(doc, dir / "bad.setlist"),
                        OverlappingSegments);
    }
}
