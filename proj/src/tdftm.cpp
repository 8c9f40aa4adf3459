#include "sli/tdftm.hpp"

#include "sli/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace sli {

RealMatrix beat_synchronize(PcpView view, const BeatGrid* beats, const TdftmParams& params) {
    std::vector<double> grid;
    if (beats != nullptr) {
        grid = beats->beat_times_s;
    } else {
        if (!(params.pseudo_beat_period_s > 0.0))
            throw ValueOutOfRange("pseudo beat period must be positive");
        const double dur = view.duration_s();
        for (double t = 0.0;; t += params.pseudo_beat_period_s) {
            if (t >= dur)
                break;
            grid.push_back(t);
        }
    }
    if (grid.size() < 2)
        throw TooShort("need at least 2 beats, got " + std::to_string(grid.size()));

    const std::size_t n_rows = grid.size() - 1;
    RealMatrix out(n_rows, kPcpBins);
    const double rate = view.frame_rate_hz;
    for (std::size_t k = 0; k < n_rows; ++k) {
        // frames whose start time falls in [beat_k, beat_k+1)
        std::size_t begin = static_cast<std::size_t>(std::ceil(grid[k] * rate));
        if (begin > view.n_frames)
            begin = view.n_frames;
        while (begin > 0 && frame_to_seconds(begin - 1, rate) >= grid[k])
            --begin;
        while (begin < view.n_frames && frame_to_seconds(begin, rate) < grid[k])
            ++begin;
        std::size_t end = begin;
        while (end < view.n_frames && frame_to_seconds(end, rate) < grid[k + 1])
            ++end;
        double* row = out.row(k);
        if (end > begin) {
            for (std::size_t f = begin; f < end; ++f) {
                const float* src = view.frame(f);
                for (int c = 0; c < kPcpBins; ++c)
                    row[c] += src[c];
            }
            const double inv = 1.0 / static_cast<double>(end - begin);
            for (int c = 0; c < kPcpBins; ++c)
                row[c] *= inv;
        }
        // empty intervals stay zero
    }
    return out;
}

namespace {

// Twiddle tables for one axis: w[k][n] = exp(-2*pi*i*k*n / size).
struct DftTable {
    std::size_t size;
    std::vector<double> re;
    std::vector<double> im;

    explicit DftTable(std::size_t n) : size(n), re(n * n), im(n * n) {
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t t = 0; t < n; ++t) {
                const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * t) /
                                   static_cast<double>(n);
                re[k * n + t] = std::cos(ang);
                im[k * n + t] = std::sin(ang);
            }
        }
    }
};

// |2D DFT| of one 12 x B patch (bins x beats); patch rows come from
// beat_pcp rows [row_of(t)] with bins as the first axis.
void patch_magnitudes(const RealMatrix& beat_pcp,
                      const std::vector<std::size_t>& beat_rows, const DftTable& beat_table,
                      const DftTable& bin_table, std::vector<double>& tmp_re,
                      std::vector<double>& tmp_im, std::vector<double>& out) {
    const std::size_t b = beat_table.size;
    // First pass: DFT along the beat axis for every bin (real input).
    // tmp[c * b + v] = sum_t x(c, t) * w_b(v, t)
    tmp_re.assign(kPcpBins * b, 0.0);
    tmp_im.assign(kPcpBins * b, 0.0);
    for (std::size_t t = 0; t < b; ++t) {
        const double* row = beat_pcp.row(beat_rows[t]);
        for (std::size_t v = 0; v < b; ++v) {
            const double wr = beat_table.re[v * b + t];
            const double wi = beat_table.im[v * b + t];
            for (int c = 0; c < kPcpBins; ++c) {
                tmp_re[static_cast<std::size_t>(c) * b + v] += row[c] * wr;
                tmp_im[static_cast<std::size_t>(c) * b + v] += row[c] * wi;
            }
        }
    }
    // Second pass: DFT along the bin axis, magnitude out.
    out.resize(kPcpBins * b);
    for (std::size_t u = 0; u < kPcpBins; ++u) {
        for (std::size_t v = 0; v < b; ++v) {
            double acc_re = 0.0, acc_im = 0.0;
            for (int c = 0; c < kPcpBins; ++c) {
                const double wr = bin_table.re[u * kPcpBins + c];
                const double wi = bin_table.im[u * kPcpBins + c];
                const double xr = tmp_re[static_cast<std::size_t>(c) * b + v];
                const double xi = tmp_im[static_cast<std::size_t>(c) * b + v];
                acc_re += xr * wr - xi * wi;
                acc_im += xr * wi + xi * wr;
            }
            out[u * b + v] = std::sqrt(acc_re * acc_re + acc_im * acc_im);
        }
    }
}

} // namespace

TdftmEmbedding tdftm_embed(const RealMatrix& beat_pcp, const TdftmParams& params) {
    if (beat_pcp.rows == 0)
        throw TooShort("no beat rows to embed");
    if (beat_pcp.cols != kPcpBins)
        throw LengthMismatch("beat-synchronous input must have 12 bins");
    if (params.patch_beats < 2 || params.patch_hop < 1)
        throw ValueOutOfRange("patch_beats >= 2 and patch_hop >= 1 required");

    const std::size_t b = static_cast<std::size_t>(params.patch_beats);
    const std::size_t n = beat_pcp.rows;

    // Patch row index lists; shorter inputs tile cyclically to one patch.
    std::vector<std::vector<std::size_t>> patches;
    if (n < b) {
        std::vector<std::size_t> rows(b);
        for (std::size_t t = 0; t < b; ++t)
            rows[t] = t % n;
        patches.push_back(std::move(rows));
    } else {
        for (std::size_t p = 0; p + b <= n; p += static_cast<std::size_t>(params.patch_hop)) {
            std::vector<std::size_t> rows(b);
            for (std::size_t t = 0; t < b; ++t)
                rows[t] = p + t;
            patches.push_back(std::move(rows));
        }
    }

    const DftTable beat_table(b);
    const DftTable bin_table(kPcpBins);

    std::vector<std::vector<double>> mags(patches.size());
    std::vector<double> tmp_re, tmp_im;
    for (std::size_t p = 0; p < patches.size(); ++p)
        patch_magnitudes(beat_pcp, patches[p], beat_table, bin_table, tmp_re, tmp_im, mags[p]);

    TdftmEmbedding emb;
    emb.vector.resize(kPcpBins * b);
    if (mags.size() == 1) {
        emb.vector = std::move(mags[0]);
        return emb;
    }
    std::vector<double> column(mags.size());
    for (std::size_t d = 0; d < emb.vector.size(); ++d) {
        for (std::size_t p = 0; p < mags.size(); ++p)
            column[p] = mags[p][d];
        const std::size_t mid = column.size() / 2;
        std::nth_element(column.begin(), column.begin() + mid, column.end());
        double med = column[mid];
        if (column.size() % 2 == 0) {
            const double lower = *std::max_element(column.begin(), column.begin() + mid);
            med = 0.5 * (lower + med);
        }
        emb.vector[d] = med;
    }
    return emb;
}

double tdftm_distance(const TdftmEmbedding& a, const TdftmEmbedding& b) {
    if (a.vector.size() != b.vector.size())
        throw LengthMismatch("embedding lengths " + std::to_string(a.vector.size()) + " vs " +
                             std::to_string(b.vector.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.vector.size(); ++i) {
        const double d = a.vector[i] - b.vector[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

} // namespace sli
