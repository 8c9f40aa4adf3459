#include "doctest.h"

#include "sli/embed.hpp"
#include "sli/errors.hpp"
#include "sli/rng.hpp"

#include "oracles.hpp"

#include <filesystem>

using namespace sli;
namespace fs = std::filesystem;

namespace {

TrackEmbedding random_embedding(Rng& rng, std::size_t dim, std::string id) {
    std::vector<float> v(dim);
    for (auto& x : v)
        x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return TrackEmbedding::make(std::move(v), std::move(id));
}

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "sli_test_embed";
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("embedding file round trip") {
    Rng rng(20);
    std::vector<TrackEmbedding> rows;
    for (int i = 0; i < 3; ++i)
        rows.push_back(random_embedding(rng, 256, "track" + std::to_string(i)));
    const fs::path path = temp_dir() / "refs.slem";
    write_embeddings(rows, path);
    const auto back = load_embeddings(path);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].id == rows[i].id);
        CHECK(back[i].vector == rows[i].vector);
        CHECK(back[i].norm == doctest::Approx(rows[i].norm));
    }
}

TEST_CASE("embedding file rejections") {
    Rng rng(21);
    SUBCASE("mixed dimensions cannot be written") {
        std::vector<TrackEmbedding> rows;
        rows.push_back(random_embedding(rng, 256, "a"));
        rows.push_back(random_embedding(rng, 128, "b"));
        CHECK_THROWS_AS(write_embeddings(rows, temp_dir() / "mixed.slem"),
                        DimensionMismatch);
    }
    SUBCASE("zero rows are rejected at load") {
        std::vector<TrackEmbedding> rows;
        rows.push_back(random_embedding(rng, 8, "ok"));
        TrackEmbedding zero;
        zero.vector.assign(8, 0.0f);
        zero.id = "zero";
        rows.push_back(zero);
        const fs::path path = temp_dir() / "zero.slem";
        write_embeddings(rows, path);
        CHECK_THROWS_AS(load_embeddings(path), ZeroNorm);
    }
}

TEST_CASE("fallback_embed") {
    Rng rng(22);

    SUBCASE("dimension must be a multiple of 24") {
        const PcpMatrix m = oracles::random_pcp(rng, 50, 10.0);
        CHECK_THROWS_AS(fallback_embed(view_of(m), 256, "x"), DimensionMismatch);
        CHECK(fallback_embed(view_of(m), 240, "x").vector.size() == 240);
    }
    SUBCASE("constant input zeroes every deviation block") {
        const PcpMatrix m = make_pcp_matrix(std::vector<float>(12 * 80, 0.6f), 10.0);
        const TrackEmbedding e = fallback_embed(view_of(m), 48, "c");
        for (int block = 0; block < 2; ++block)
            for (int c = 0; c < 12; ++c)
                CHECK(e.vector[block * 24 + 12 + c] == 0.0f);
    }
    SUBCASE("deterministic") {
        const PcpMatrix m = oracles::random_pcp(rng, 64, 10.0);
        const TrackEmbedding a = fallback_embed(view_of(m), 240, "x");
        const TrackEmbedding b = fallback_embed(view_of(m), 240, "x");
        CHECK(a.vector == b.vector);
    }
    SUBCASE("pitch rotation permutes coordinates inside each block") {
        const PcpMatrix m = oracles::random_pcp(rng, 64, 10.0);
        const int k = 4;
        const TrackEmbedding plain = fallback_embed(view_of(m), 48, "x");
        const TrackEmbedding rot = fallback_embed(view_of(rotate_pitch(m, k)), 48, "x");
        for (int block = 0; block < 2; ++block) {
            for (int half = 0; half < 2; ++half) {
                const int base = block * 24 + half * 12;
                for (int c = 0; c < 12; ++c)
                    CHECK(rot.vector[base + c] ==
                          doctest::Approx(plain.vector[base + (c - k + 12) % 12])
                              .epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("cosine_distance") {
    const auto make = [](std::vector<float> v) {
        return TrackEmbedding::make(std::move(v), "e");
    };
    const TrackEmbedding a = make({1.0f, 0.0f});
    CHECK(cosine_distance(a, a) == 0.0);
    CHECK(cosine_distance(a, make({0.0f, 2.0f})) == doctest::Approx(1.0));
    CHECK(cosine_distance(a, make({-3.0f, 0.0f})) == doctest::Approx(2.0));
    CHECK_THROWS_AS(cosine_distance(a, make({1.0f, 2.0f, 3.0f})), DimensionMismatch);
}

TEST_CASE("top1 retrieval") {
    Rng rng(23);

    SUBCASE("the query itself wins with distance zero") {
        std::vector<TrackEmbedding> rows;
        for (int i = 0; i < 10; ++i)
            rows.push_back(random_embedding(rng, 32, "t" + std::to_string(i)));
        const TrackEmbedding q = rows[4];
        const EmbeddingIndex index(rows);
        const auto [id, d] = index.top1(q);
        CHECK(id == "t4");
        CHECK(d <= 1e-12);
    }
    SUBCASE("single-element index always answers") {
        std::vector<TrackEmbedding> rows{random_embedding(rng, 8, "only")};
        const EmbeddingIndex index(rows);
        CHECK(index.top1(random_embedding(rng, 8, "q")).first == "only");
    }
    SUBCASE("matches a brute-force scan over 100 references") {
        std::vector<TrackEmbedding> rows;
        for (int i = 0; i < 100; ++i)
            rows.push_back(random_embedding(rng, 64, "r" + std::to_string(1000 + i)));
        const EmbeddingIndex index(rows);
        for (int rep = 0; rep < 25; ++rep) {
            const TrackEmbedding q = random_embedding(rng, 64, "q");
            const auto expect = oracles::top1_brute_force(rows, q);
            const auto got = index.top1(q);
            CHECK(got.first == expect.first);
            CHECK(std::abs(got.second - expect.second) <= 1e-12);
        }
    }
    SUBCASE("ties break to the smaller id") {
        TrackEmbedding a = TrackEmbedding::make({1.0f, 1.0f}, "zeta");
        TrackEmbedding b = TrackEmbedding::make({2.0f, 2.0f}, "alpha");
        const EmbeddingIndex index({a, b});
        CHECK(index.top1(TrackEmbedding::make({3.0f, 3.0f}, "q")).first == "alpha");
    }
    SUBCASE("scaling the query does not change the winner") {
        std::vector<TrackEmbedding> rows;
        for (int i = 0; i < 20; ++i)
            rows.push_back(random_embedding(rng, 16, "r" + std::to_string(i)));
        const EmbeddingIndex index(rows);
        TrackEmbedding q = random_embedding(rng, 16, "q");
        const auto base = index.top1(q);
        for (auto& v : q.vector)
            v *= 7.5f;
        q = TrackEmbedding::make(q.vector, "q");
        CHECK(index.top1(q).first == base.first);
    }
    SUBCASE("empty index throws") {
        const EmbeddingIndex index;
        CHECK_THROWS_AS(index.top1(random_embedding(rng, 8, "q")), EmptyIndex);
    }
}
