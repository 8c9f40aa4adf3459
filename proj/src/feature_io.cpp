#include "sli/feature_io.hpp"

#include "sli/errors.hpp"
#include "sli/textio.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace sli {

namespace {

constexpr char kMagic[4] = {'S', 'L', 'P', 'C'};
constexpr std::uint32_t kVersion = 1;

// All multi-byte fields are little-endian on disk.
static_assert(std::endian::native == std::endian::little,
              "feature file reader assumes a little-endian host");

class ByteReader {
public:
    ByteReader(const char* data, std::size_t size) : data_(data), size_(size) {}

    void raw(void* dst, std::size_t n) {
        if (pos_ + n > size_)
            throw ShapeMismatch("feature file truncated: wanted " + std::to_string(n) +
                                " bytes at offset " + std::to_string(pos_));
        std::memcpy(dst, data_ + pos_, n);
        pos_ += n;
    }

    std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
    std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
    double f64() { double v; raw(&v, 8); return v; }

    std::size_t remaining() const { return size_ - pos_; }

private:
    const char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

class ByteWriter {
public:
    void raw(const void* src, std::size_t n) {
        const char* p = static_cast<const char*>(src);
        buf_.insert(buf_.end(), p, p + n);
    }
    void u8(std::uint8_t v) { raw(&v, 1); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void f64(double v) { raw(&v, 8); }
    const std::string& str() const { return buf_; }

private:
    std::string buf_;
};

std::string read_binary_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingFile("cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw IoFailure("read failed for " + path.string());
    return data;
}

} // namespace

FeatureFile parse_feature_file(const std::filesystem::path& path) {
    const std::string data = read_binary_file(path);
    if (data.size() < 4 || std::memcmp(data.data(), kMagic, 4) != 0)
        throw BadMagic(path.string() + " is not a feature file");

    ByteReader r(data.data(), data.size());
    char magic[4];
    r.raw(magic, 4);
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw VersionUnsupported("feature file version " + std::to_string(version));
    const std::uint32_t n_frames = r.u32();
    const std::uint32_t n_bins = r.u32();
    const double rate = r.f64();
    const std::uint8_t has_beats = r.u8();

    if (n_frames == 0)
        throw EmptyFeature(path.string() + " declares zero frames");
    if (n_bins != kPcpBins)
        throw ShapeMismatch("expected " + std::to_string(kPcpBins) + " bins, file declares " +
                            std::to_string(n_bins));

    const std::size_t n_values = static_cast<std::size_t>(n_frames) * n_bins;
    std::vector<float> values(n_values);
    r.raw(values.data(), n_values * sizeof(float));

    std::optional<BeatGrid> beats;
    if (has_beats) {
        const std::uint32_t n_beats = r.u32();
        BeatGrid grid;
        grid.beat_times_s.resize(n_beats);
        r.raw(grid.beat_times_s.data(), static_cast<std::size_t>(n_beats) * sizeof(double));
        beats = std::move(grid);
    }
    if (r.remaining() != 0)
        throw ShapeMismatch(path.string() + " has " + std::to_string(r.remaining()) +
                            " trailing bytes");

    FeatureFile out;
    out.pcp = make_pcp_matrix(std::move(values), rate);
    if (beats)
        validate_beats(*beats, out.pcp.duration_s());
    out.beats = std::move(beats);
    out.meta.track_id = path.stem().string();
    out.meta.duration_s = out.pcp.duration_s();
    out.meta.source_kind = SourceKind::reference;
    return out;
}

void write_feature_file(const PcpMatrix& matrix, const FeatureMeta& meta,
                        const std::optional<BeatGrid>& beats,
                        const std::filesystem::path& path) {
    (void)meta; // identity lives in the catalog manifest, not the payload
    validate_pcp(matrix);
    if (beats)
        validate_beats(*beats, matrix.duration_s());

    ByteWriter w;
    w.raw(kMagic, 4);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(matrix.n_frames));
    w.u32(kPcpBins);
    w.f64(matrix.frame_rate_hz);
    w.u8(beats ? 1 : 0);
    w.raw(matrix.values.data(), matrix.values.size() * sizeof(float));
    if (beats) {
        w.u32(static_cast<std::uint32_t>(beats->beat_times_s.size()));
        w.raw(beats->beat_times_s.data(), beats->beat_times_s.size() * sizeof(double));
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoFailure("cannot open " + path.string() + " for writing");
    out.write(w.str().data(), static_cast<std::streamsize>(w.str().size()));
    if (!out)
        throw IoFailure("write failed for " + path.string());
}

PcpMatrix parse_feature_csv(const std::filesystem::path& path, double frame_rate_hz) {
    const std::string text = read_text_file(path);
    const auto lines = split_lines(text);
    if (lines.empty())
        throw ParseError(path.string() + " is empty");

    const auto header = split(lines[0], ',');
    if (header.size() != kPcpBins + 1 || header[0] != "frame")
        throw ParseError(path.string() + ": expected header frame,b0,...,b11");
    for (int c = 0; c < kPcpBins; ++c) {
        if (header[c + 1] != "b" + std::to_string(c))
            throw ParseError(path.string() + ": expected header frame,b0,...,b11");
    }

    std::vector<float> values;
    values.reserve((lines.size() - 1) * kPcpBins);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty())
            continue;
        const auto cells = split(lines[i], ',');
        if (cells.size() != kPcpBins + 1)
            throw ParseError(path.string() + ": row " + std::to_string(i) + " has " +
                             std::to_string(cells.size()) + " cells");
        for (int c = 0; c < kPcpBins; ++c)
            values.push_back(parse_float(cells[c + 1]));
    }
    return make_pcp_matrix(std::move(values), frame_rate_hz);
}

} // namespace sli
