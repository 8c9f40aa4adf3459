#include "sli/embed.hpp"

#include "sli/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

namespace sli {

namespace {

constexpr char kMagic[4] = {'S', 'L', 'E', 'M'};
constexpr std::uint32_t kVersion = 1;

double vector_norm(std::span<const float> v) {
    double acc = 0.0;
    for (const float x : v)
        acc += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(acc);
}

} // namespace

TrackEmbedding TrackEmbedding::make(std::vector<float> values, std::string id) {
    for (const float v : values)
        if (!std::isfinite(v))
            throw NonFiniteValue("embedding '" + id + "' contains a non-finite entry");
    TrackEmbedding e;
    e.norm = vector_norm(values);
    e.vector = std::move(values);
    e.id = std::move(id);
    return e;
}

std::vector<TrackEmbedding> load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingFile("cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    const auto need = [&](std::size_t n) {
        if (pos + n > data.size())
            throw ParseError(path.string() + " truncated at offset " + std::to_string(pos));
    };
    const auto u16 = [&] {
        need(2);
        std::uint16_t v;
        std::memcpy(&v, data.data() + pos, 2);
        pos += 2;
        return v;
    };
    const auto u32 = [&] {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, data.data() + pos, 4);
        pos += 4;
        return v;
    };

    need(4);
    if (std::memcmp(data.data(), kMagic, 4) != 0)
        throw BadMagic(path.string() + " is not an embedding file");
    pos += 4;
    if (u32() != kVersion)
        throw VersionUnsupported("embedding file version");
    const std::uint32_t count = u32();
    const std::uint32_t dim = u32();
    if (dim == 0)
        throw DimensionMismatch("embedding dimension must be positive");

    std::vector<TrackEmbedding> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t id_len = u16();
        need(id_len);
        std::string id(data.data() + pos, id_len);
        pos += id_len;
        std::vector<float> values(dim);
        need(static_cast<std::size_t>(dim) * sizeof(float));
        std::memcpy(values.data(), data.data() + pos, dim * sizeof(float));
        pos += dim * sizeof(float);
        auto e = TrackEmbedding::make(std::move(values), std::move(id));
        if (e.norm == 0.0)
            throw ZeroNorm("embedding '" + e.id + "' is all zeros");
        out.push_back(std::move(e));
    }
    if (pos != data.size())
        throw ParseError(path.string() + " has trailing bytes");
    return out;
}

void write_embeddings(std::span<const TrackEmbedding> embeddings,
                      const std::filesystem::path& path) {
    std::size_t dim = embeddings.empty() ? 0 : embeddings[0].vector.size();
    for (const auto& e : embeddings)
        if (e.vector.size() != dim)
            throw DimensionMismatch("embedding '" + e.id + "' has dimension " +
                                    std::to_string(e.vector.size()) + ", expected " +
                                    std::to_string(dim));

    std::string buf;
    const auto raw = [&](const void* p, std::size_t n) {
        buf.append(static_cast<const char*>(p), n);
    };
    const auto u32 = [&](std::uint32_t v) { raw(&v, 4); };
    raw(kMagic, 4);
    u32(kVersion);
    u32(static_cast<std::uint32_t>(embeddings.size()));
    u32(static_cast<std::uint32_t>(dim));
    for (const auto& e : embeddings) {
        const std::uint16_t id_len = static_cast<std::uint16_t>(e.id.size());
        raw(&id_len, 2);
        raw(e.id.data(), e.id.size());
        raw(e.vector.data(), e.vector.size() * sizeof(float));
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoFailure("cannot open " + path.string() + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out)
        throw IoFailure("write failed for " + path.string());
}

TrackEmbedding fallback_embed(PcpView view, int d, std::string id) {
    if (d < 24 || d % 24 != 0)
        throw DimensionMismatch("fallback embedding dimension must be a positive multiple "
                                "of 24, got " + std::to_string(d));
    const std::size_t n = view.n_frames;
    const int blocks = d / 24;

    // Global per-bin mean, the anchor for every deviation block.
    std::array<double, kPcpBins> mean{};
    for (std::size_t t = 0; t < n; ++t) {
        const float* f = view.frame(t);
        for (int c = 0; c < kPcpBins; ++c)
            mean[c] += f[c];
    }
    for (int c = 0; c < kPcpBins; ++c)
        mean[c] /= static_cast<double>(n);

    std::vector<float> out(static_cast<std::size_t>(d), 0.0f);
    for (int j = 0; j < blocks; ++j) {
        std::array<double, kPcpBins> wmean{};
        std::array<double, kPcpBins> wvar{};
        for (std::size_t t = 0; t < n; ++t) {
            // DCT-II style time weight; block 0 reduces to plain mean/std.
            const double w = std::cos(std::numbers::pi * static_cast<double>(j) *
                                      (static_cast<double>(t) + 0.5) /
                                      static_cast<double>(n));
            const float* f = view.frame(t);
            for (int c = 0; c < kPcpBins; ++c) {
                wmean[c] += w * f[c];
                const double dev = f[c] - mean[c];
                wvar[c] += w * w * dev * dev;
            }
        }
        float* block = out.data() + static_cast<std::size_t>(j) * 24;
        for (int c = 0; c < kPcpBins; ++c) {
            block[c] = static_cast<float>(wmean[c] / static_cast<double>(n));
            block[kPcpBins + c] =
                static_cast<float>(std::sqrt(wvar[c] / static_cast<double>(n)));
        }
    }
    return TrackEmbedding::make(std::move(out), std::move(id));
}

double cosine_distance(const TrackEmbedding& a, const TrackEmbedding& b) {
    if (a.vector.size() != b.vector.size())
        throw DimensionMismatch("cosine distance of dimensions " +
                                std::to_string(a.vector.size()) + " and " +
                                std::to_string(b.vector.size()));
    if (a.norm == 0.0 || b.norm == 0.0)
        throw ZeroNorm("cosine distance undefined for zero vectors");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.vector.size(); ++i)
        dot += static_cast<double>(a.vector[i]) * static_cast<double>(b.vector[i]);
    return std::clamp(1.0 - dot / (a.norm * b.norm), 0.0, 2.0);
}

EmbeddingIndex::EmbeddingIndex(std::vector<TrackEmbedding> references) {
    if (references.empty())
        return;
    std::sort(references.begin(), references.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < references.size(); ++i)
        if (references[i].id == references[i - 1].id)
            throw DuplicateId("embedding id '" + references[i].id + "'");

    dim_ = references[0].vector.size();
    normalized_.resize(references.size() * dim_);
    for (std::size_t i = 0; i < references.size(); ++i) {
        const auto& e = references[i];
        if (e.vector.size() != dim_)
            throw DimensionMismatch("embedding '" + e.id + "' has dimension " +
                                    std::to_string(e.vector.size()));
        if (e.norm == 0.0)
            throw ZeroNorm("embedding '" + e.id + "' is all zeros");
        ids_.push_back(e.id);
        const double inv = 1.0 / e.norm;
        for (std::size_t c = 0; c < dim_; ++c)
            normalized_[i * dim_ + c] = static_cast<double>(e.vector[c]) * inv;
    }
}

std::pair<std::string, double> EmbeddingIndex::top1(const TrackEmbedding& query) const {
    if (ids_.empty())
        throw EmptyIndex("top1 on an empty embedding index");
    if (query.vector.size() != dim_)
        throw DimensionMismatch("query dimension " + std::to_string(query.vector.size()) +
                                " vs index dimension " + std::to_string(dim_));
    if (query.norm == 0.0)
        throw ZeroNorm("query embedding is all zeros");

    // Max dot product against unit rows == min cosine distance. Scanning
    // in id order makes ties resolve to the smallest id.
    const double inv = 1.0 / query.norm;
    double best_dot = -std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        const double* row = normalized_.data() + i * dim_;
        double dot = 0.0;
        for (std::size_t c = 0; c < dim_; ++c)
            dot += row[c] * (static_cast<double>(query.vector[c]) * inv);
        if (dot > best_dot) {
            best_dot = dot;
            best = i;
        }
    }
    return {ids_[best], std::clamp(1.0 - best_dot, 0.0, 2.0)};
}

} // namespace sli
