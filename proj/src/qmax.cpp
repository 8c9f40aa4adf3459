#include "sli/qmax.hpp"

#include "sli/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace sli {

namespace {

// Smallest value v such that >= ceil(kappa*n) entries are <= v,
// i.e. the ceil(kappa*n)-th smallest element.
std::size_t quantile_rank(double kappa, std::size_t n) {
    std::size_t k = static_cast<std::size_t>(std::ceil(kappa * static_cast<double>(n)));
    if (k < 1)
        k = 1;
    if (k > n)
        k = n;
    return k;
}

void check_stackable(std::size_t n_frames, int m, int stride, const char* side) {
    if (m < 1 || stride < 1)
        throw ValueOutOfRange("stack size and stride must be >= 1");
    if (stacked_rows(n_frames, m, stride) == 0)
        throw TooShort(std::string(side) + " has " + std::to_string(n_frames) +
                       " frames, needs at least " +
                       std::to_string(static_cast<std::size_t>(m - 1) * stride + 1));
}

} // namespace

RealMatrix stack_frames(PcpView view, int m, int stride) {
    check_stackable(view.n_frames, m, stride, "input");
    const std::size_t rows = stacked_rows(view.n_frames, m, stride);
    RealMatrix out(rows, static_cast<std::size_t>(m) * kPcpBins);
    for (std::size_t i = 0; i < rows; ++i) {
        double* dst = out.row(i);
        for (int t = 0; t < m; ++t) {
            const float* src = view.frame(i + static_cast<std::size_t>(t) * stride);
            for (int c = 0; c < kPcpBins; ++c)
                dst[t * kPcpBins + c] = src[c];
        }
    }
    return out;
}

std::array<double, kPcpBins> mean_profile(PcpView view) {
    std::array<double, kPcpBins> sum{};
    for (std::size_t i = 0; i < view.n_frames; ++i) {
        const float* f = view.frame(i);
        for (int c = 0; c < kPcpBins; ++c)
            sum[c] += f[c];
    }
    for (int c = 0; c < kPcpBins; ++c)
        sum[c] /= static_cast<double>(view.n_frames);
    return sum;
}

int compute_oti_profiles(const std::array<double, kPcpBins>& query_mean,
                         const std::array<double, kPcpBins>& ref_mean) {
    const auto is_zero = [](const std::array<double, kPcpBins>& p) {
        for (const double v : p)
            if (v != 0.0)
                return false;
        return true;
    };
    if (is_zero(query_mean) || is_zero(ref_mean))
        throw DegenerateProfile("global mean profile is all zero");

    // Shift k scores the hypothesis that ref equals the query transposed
    // up by k bins; smallest k wins ties.
    int best_k = 0;
    double best = -1.0;
    for (int k = 0; k < kPcpBins; ++k) {
        double s = 0.0;
        for (int c = 0; c < kPcpBins; ++c)
            s += query_mean[c] * ref_mean[(c + k) % kPcpBins];
        if (s > best) {
            best = s;
            best_k = k;
        }
    }
    return best_k;
}

int compute_oti(PcpView query, PcpView ref) {
    return compute_oti_profiles(mean_profile(query), mean_profile(ref));
}

double CrossRecurrenceMatrix::mean() const {
    if (bits.empty())
        return 0.0;
    std::size_t ones = 0;
    for (const auto b : bits)
        ones += b;
    return static_cast<double>(ones) / static_cast<double>(bits.size());
}

CrossRecurrenceMatrix binarize_cross_similarity(const RealMatrix& query_stacked,
                                                const RealMatrix& ref_stacked, double kappa) {
    if (query_stacked.rows == 0 || ref_stacked.rows == 0)
        throw TooShort("stacked matrices must be non-empty");
    if (query_stacked.cols != ref_stacked.cols)
        throw LengthMismatch("stacked dimensionalities differ");
    const std::size_t rows = query_stacked.rows;
    const std::size_t cols = ref_stacked.rows;
    const std::size_t dim = query_stacked.cols;

    // Squared distances; comparisons against the squared quantile are
    // order-identical to comparing Euclidean distances.
    RealMatrix d2(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const double* qi = query_stacked.row(i);
        double* out = d2.row(i);
        for (std::size_t j = 0; j < cols; ++j) {
            const double* rj = ref_stacked.row(j);
            double acc = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double diff = qi[c] - rj[c];
                acc += diff * diff;
            }
            out[j] = acc;
        }
    }

    std::vector<double> row_thr(rows), col_thr(cols), scratch;
    const std::size_t kr = quantile_rank(kappa, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        scratch.assign(d2.row(i), d2.row(i) + cols);
        std::nth_element(scratch.begin(), scratch.begin() + (kr - 1), scratch.end());
        row_thr[i] = scratch[kr - 1];
    }
    const std::size_t kc = quantile_rank(kappa, rows);
    for (std::size_t j = 0; j < cols; ++j) {
        scratch.resize(rows);
        for (std::size_t i = 0; i < rows; ++i)
            scratch[i] = d2.at(i, j);
        std::nth_element(scratch.begin(), scratch.begin() + (kc - 1), scratch.end());
        col_thr[j] = scratch[kc - 1];
    }

    CrossRecurrenceMatrix crm;
    crm.rows = rows;
    crm.cols = cols;
    crm.bits.resize(rows * cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            crm.bits[i * cols + j] =
                (d2.at(i, j) <= row_thr[i] && d2.at(i, j) <= col_thr[j]) ? 1 : 0;
    return crm;
}

namespace {

// Values of row[0..n) on one side of the threshold, written to buf in
// row order (buf may alias row for in-place filtering; writes never
// overtake reads). Compress-store where available, branchless otherwise.
template <bool KeepBelow>
std::size_t filter_side(const float* row, std::size_t n, float threshold, float* buf) {
    std::size_t count = 0;
    std::size_t j = 0;
#if defined(__AVX512F__)
    const __m512 h = _mm512_set1_ps(threshold);
    for (; j + 16 <= n; j += 16) {
        const __m512 x = _mm512_loadu_ps(row + j);
        const __mmask16 m = KeepBelow ? _mm512_cmp_ps_mask(x, h, _CMP_LE_OQ)
                                      : _mm512_cmp_ps_mask(x, h, _CMP_GT_OQ);
        _mm512_mask_compressstoreu_ps(buf + count, m, x);
        count += static_cast<unsigned>(__builtin_popcount(m));
    }
#endif
    for (; j < n; ++j) {
        const float x = row[j];
        buf[count] = x;
        count += (KeepBelow ? x <= threshold : x > threshold) ? 1 : 0;
    }
    return count;
}

float median3(float a, float b, float c) {
    return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

// Exact k-th smallest (1-based) of a[0..n), destroying a. Quickselect
// with in-place vectorized partitioning; the first pivot usually comes
// from the previous row's threshold and lands next to the target rank.
float select_rank(float* a, std::size_t n, std::size_t k, float first_pivot) {
    float pivot = first_pivot >= 0.0f ? first_pivot : median3(a[0], a[n / 2], a[n - 1]);
    while (n > 64) {
        std::size_t below = 0;
        for (std::size_t j = 0; j < n; ++j)
            below += a[j] <= pivot ? 1 : 0;
        if (below >= k && below < n) {
            n = filter_side<true>(a, n, pivot, a);
        } else if (below < k) {
            n = filter_side<false>(a, n, pivot, a);
            k -= below;
        } else {
            // everything <= pivot; try a pivot from the data itself
            const float next = median3(a[0], a[n / 2], a[n - 1]);
            if (next == pivot)
                break; // effectively constant range
            pivot = next;
            continue;
        }
        pivot = median3(a[0], a[n / 2], a[n - 1]);
    }
    std::nth_element(a, a + (k - 1), a + n);
    return a[k - 1];
}

// Exact k-th smallest of row[0..n) with threshold hints carried from the
// previous row (adjacent stacked rows share all but one frame, so their
// quantiles barely move). Hints change the work, never the result.
float select_kth_hinted(const float* row, std::size_t n, std::size_t k, float prev,
                        std::vector<float>& buf) {
    buf.resize(n);
    if (prev >= 0.0f) {
        for (float slack : {1.05f, 1.6f}) {
            const std::size_t count = filter_side<true>(row, n, prev * slack, buf.data());
            if (count >= k)
                return select_rank(buf.data(), count, k, prev);
        }
    }
    std::memcpy(buf.data(), row, n * sizeof(float));
    return select_rank(buf.data(), n, k, prev);
}

void quantile_thresholds(const float* data, std::size_t rows, std::size_t cols,
                         std::size_t k, std::vector<float>& out, std::vector<float>& buf) {
    out.resize(rows);
    float prev = -1.0f;
    for (std::size_t i = 0; i < rows; ++i) {
        out[i] = select_kth_hinted(data + i * cols, cols, k, prev, buf);
        prev = out[i];
    }
}

// Pure bit selection keeps the arithmetic identical to the branchy form
// while letting the loop run without control flow.
inline double select_bits(bool take_a, double a, double b) {
    const std::uint64_t m = take_a ? ~std::uint64_t{0} : 0;
    return std::bit_cast<double>((std::bit_cast<std::uint64_t>(a) & m) |
                                 (std::bit_cast<std::uint64_t>(b) & ~m));
}

double qmax_score_raw(const std::uint8_t* bits, std::size_t rows, std::size_t cols,
                      double gap_onset, double gap_extend) {
    if (rows == 0 || cols == 0)
        return 0.0;
    // Rolling rows: q1/q2 hold Q at rows i-1/i-2. The gap-penalized
    // values Q - gamma are recomputed from the recurrence rows c1/c2 on
    // the fly. Out-of-range predecessors read as zero, which matches a
    // two-cell zero padding. The wide path below performs the exact same
    // max/sub/add/blend operations eight lanes at a time, so scalar and
    // vector builds produce bit-identical scores.
    std::vector<double> q1(cols, 0.0), q2(cols, 0.0), cur(cols, 0.0);
    const std::vector<std::uint8_t> zero_row(cols, 0);
    const std::uint8_t* c1 = zero_row.data();
    const std::uint8_t* c2 = zero_row.data();
    double best = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const std::uint8_t* __restrict__ c = bits + i * cols;
        const double* __restrict__ q1p = q1.data();
        const double* __restrict__ q2p = q2.data();
        double* __restrict__ curp = cur.data();
        curp[0] = c[0] ? 1.0 : 0.0;
        double row_best = curp[0];
        if (cols > 1) {
            const double s10 = q1p[0] - select_bits(c1[0] != 0, gap_onset, gap_extend);
            const double s20 = q2p[0] - select_bits(c2[0] != 0, gap_onset, gap_extend);
            curp[1] = c[1] ? std::max(q1p[0], q2p[0]) + 1.0
                           : std::max(std::max(s10, s20), 0.0);
            row_best = std::max(row_best, curp[1]);
        }
        std::size_t j = 2;
#if defined(__AVX512F__)
        {
            const __m512d one = _mm512_set1_pd(1.0);
            const __m512d zero = _mm512_setzero_pd();
            const __m512d go = _mm512_set1_pd(gap_onset);
            const __m512d ge = _mm512_set1_pd(gap_extend);
            const __m512i izero = _mm512_setzero_si512();
            const auto pen8 = [&](const std::uint8_t* p) {
                const __m512i w = _mm512_cvtepu8_epi64(
                    _mm_loadl_epi64(reinterpret_cast<const __m128i*>(p)));
                return _mm512_mask_blend_pd(_mm512_cmpneq_epi64_mask(w, izero), ge, go);
            };
            __m512d best8 = zero;
            for (; j + 8 <= cols; j += 8) {
                const __m512d q1m1 = _mm512_loadu_pd(q1p + j - 1);
                const __m512d q2m1 = _mm512_loadu_pd(q2p + j - 1);
                const __m512d q1m2 = _mm512_loadu_pd(q1p + j - 2);
                const __m512d ext = _mm512_add_pd(
                    _mm512_max_pd(_mm512_max_pd(q1m1, q2m1), q1m2), one);
                const __m512d s1m1 = _mm512_sub_pd(q1m1, pen8(c1 + j - 1));
                const __m512d s2m1 = _mm512_sub_pd(q2m1, pen8(c2 + j - 1));
                const __m512d s1m2 = _mm512_sub_pd(q1m2, pen8(c1 + j - 2));
                const __m512d gap = _mm512_max_pd(_mm512_max_pd(s1m1, s2m1),
                                                  _mm512_max_pd(s1m2, zero));
                const __m512i cw = _mm512_cvtepu8_epi64(
                    _mm_loadl_epi64(reinterpret_cast<const __m128i*>(c + j)));
                const __m512d v = _mm512_mask_blend_pd(
                    _mm512_cmpneq_epi64_mask(cw, izero), gap, ext);
                _mm512_storeu_pd(curp + j, v);
                best8 = _mm512_max_pd(best8, v);
            }
            row_best = std::max(row_best, _mm512_reduce_max_pd(best8));
        }
#endif
        for (; j < cols; ++j) {
            const double ext = std::max(std::max(q1p[j - 1], q2p[j - 1]), q1p[j - 2]) + 1.0;
            const double s1m1 =
                q1p[j - 1] - select_bits(c1[j - 1] != 0, gap_onset, gap_extend);
            const double s2m1 =
                q2p[j - 1] - select_bits(c2[j - 1] != 0, gap_onset, gap_extend);
            const double s1m2 =
                q1p[j - 2] - select_bits(c1[j - 2] != 0, gap_onset, gap_extend);
            const double gap = std::max(std::max(s1m1, s2m1), std::max(s1m2, 0.0));
            const double v = select_bits(c[j] != 0, ext, gap);
            curp[j] = v;
            row_best = std::max(row_best, v);
        }
        best = std::max(best, row_best);
        std::swap(q2, q1);
        std::swap(q1, cur);
        c2 = c1;
        c1 = c;
    }
    return best;
}

struct PairShape {
    std::size_t rows = 0;      // stacked query rows
    std::size_t cols = 0;      // stacked reference rows
    std::size_t n_q = 0;       // raw frame counts
    std::size_t n_r = 0;
};

// Squared distances of query frame qa against every reference frame,
// accumulated bin by bin over the reference's bin-major rows.
void frame_distance_row(const float* qa, const float* const* ref_bins, std::size_t n_r,
                        float* __restrict__ out) {
    {
        const float q0 = qa[0];
        const float* r = ref_bins[0];
        for (std::size_t b = 0; b < n_r; ++b) {
            const float d = q0 - r[b];
            out[b] = d * d;
        }
    }
    for (int c = 1; c < kPcpBins; ++c) {
        const float qc = qa[c];
        const float* r = ref_bins[c];
        for (std::size_t b = 0; b < n_r; ++b) {
            const float d = qc - r[b];
            out[b] += d * d;
        }
    }
}

// Fills ws.bits with the cross-recurrence matrix of (query, ref), where
// ref is given as 12 bin-major rows (rotation already applied by pointer
// permutation).
PairShape cross_recurrence_core(PcpView query, const float* const* ref_bins, std::size_t n_r,
                                const QmaxParams& p, QmaxWorkspace& ws) {
    const int m = p.stack_size;
    const int stride = p.stack_stride;
    check_stackable(query.n_frames, m, stride, "query");
    check_stackable(n_r, m, stride, "reference");

    PairShape shape;
    shape.n_q = query.n_frames;
    shape.n_r = n_r;
    shape.rows = stacked_rows(shape.n_q, m, stride);
    shape.cols = stacked_rows(n_r, m, stride);

    // Per-frame squared distances for every (query frame, ref frame).
    ws.frame_dist.resize(shape.n_q * n_r);
    for (std::size_t a = 0; a < shape.n_q; ++a)
        frame_distance_row(query.frame(a), ref_bins, n_r, ws.frame_dist.data() + a * n_r);

    // One pass produces each stacked row (sum of m per-frame rows along
    // the diagonal, spacing stride), selects its quantile threshold, and
    // scatters it into the transposed copy while still cache-hot.
    ws.stacked_dist.resize(shape.rows * shape.cols);
    ws.transposed.resize(shape.rows * shape.cols);
    ws.row_threshold.resize(shape.rows);
    const std::size_t row_rank = quantile_rank(p.kappa, shape.cols);
    float row_hint = -1.0f;
    for (std::size_t i = 0; i < shape.rows; ++i) {
        float* out = ws.stacked_dist.data() + i * shape.cols;
        std::memcpy(out, ws.frame_dist.data() + i * n_r, shape.cols * sizeof(float));
        for (int t = 1; t < m; ++t) {
            const std::size_t off = static_cast<std::size_t>(t) * stride;
            const float* src = ws.frame_dist.data() + (i + off) * n_r + off;
            for (std::size_t j = 0; j < shape.cols; ++j)
                out[j] += src[j];
        }
        ws.row_threshold[i] =
            select_kth_hinted(out, shape.cols, row_rank, row_hint, ws.quantile_scratch);
        row_hint = ws.row_threshold[i] * 1.05f;
    }

    {
        constexpr std::size_t kTile = 32;
        const float* src = ws.stacked_dist.data();
        float* dst = ws.transposed.data();
        for (std::size_t i0 = 0; i0 < shape.rows; i0 += kTile) {
            const std::size_t i1 = std::min(i0 + kTile, shape.rows);
            for (std::size_t j0 = 0; j0 < shape.cols; j0 += kTile) {
                const std::size_t j1 = std::min(j0 + kTile, shape.cols);
                for (std::size_t j = j0; j < j1; ++j) {
                    float* d = dst + j * shape.rows + i0;
                    const float* s = src + i0 * shape.cols + j;
                    for (std::size_t i = 0; i < i1 - i0; ++i)
                        d[i] = s[i * shape.cols];
                }
            }
        }
    }
    quantile_thresholds(ws.transposed.data(), shape.cols, shape.rows,
                        quantile_rank(p.kappa, shape.rows), ws.col_threshold,
                        ws.quantile_scratch);

    ws.bits.resize(shape.rows * shape.cols);
    for (std::size_t i = 0; i < shape.rows; ++i) {
        const float* row = ws.stacked_dist.data() + i * shape.cols;
        const float thr = ws.row_threshold[i];
        std::uint8_t* out = ws.bits.data() + i * shape.cols;
        for (std::size_t j = 0; j < shape.cols; ++j)
            out[j] = (row[j] <= thr) & (row[j] <= ws.col_threshold[j]) ? 1 : 0;
    }
    return shape;
}

// Bin c of the rotated reference reads bin (c+shift)%12: with bin-major
// storage that is a permutation of row pointers.
std::array<const float*, kPcpBins> rotated_bins(const PreparedRef& ref, int shift) {
    std::array<const float*, kPcpBins> out;
    for (int c = 0; c < kPcpBins; ++c)
        out[c] = ref.bin((c + shift) % kPcpBins);
    return out;
}

} // namespace

PreparedRef prepare_reference(PcpView ref) {
    PreparedRef out;
    out.n_frames = ref.n_frames;
    out.bins.resize(static_cast<std::size_t>(kPcpBins) * ref.n_frames);
    for (int c = 0; c < kPcpBins; ++c) {
        float* dst = out.bins.data() + static_cast<std::size_t>(c) * ref.n_frames;
        const float* src = ref.data + c;
        for (std::size_t b = 0; b < ref.n_frames; ++b)
            dst[b] = src[b * kPcpBins];
    }
    out.mean = mean_profile(ref);
    return out;
}

double qmax_score(const CrossRecurrenceMatrix& c, double gap_onset, double gap_extend) {
    return qmax_score_raw(c.bits.data(), c.rows, c.cols, gap_onset, gap_extend);
}

CrossRecurrenceMatrix cross_recurrence_fast(PcpView query, PcpView ref,
                                            const QmaxParams& params, QmaxWorkspace& ws) {
    const PreparedRef prepared = prepare_reference(ref);
    const auto bins = rotated_bins(prepared, 0);
    const PairShape shape =
        cross_recurrence_core(query, bins.data(), prepared.n_frames, params, ws);
    CrossRecurrenceMatrix crm;
    crm.rows = shape.rows;
    crm.cols = shape.cols;
    crm.bits.assign(ws.bits.begin(), ws.bits.begin() + shape.rows * shape.cols);
    return crm;
}

double qmax_distance_from_score(double score, std::size_t n_ref_stacked,
                                bool sqrt_normalization) {
    if (score <= 0.0)
        return kMaxDistance;
    const double n = static_cast<double>(n_ref_stacked);
    return (sqrt_normalization ? std::sqrt(n) : n) / score;
}

double qmax_distance(PcpView query, const std::array<double, kPcpBins>& query_mean,
                     const PreparedRef& ref, const QmaxParams& params, QmaxWorkspace& ws) {
    int shift = 0;
    if (params.oti_enabled) {
        // compute_oti returns k with ref ~ query transposed up by k, so
        // reading ref bin (c+k)%12 undoes the transposition exactly.
        shift = compute_oti_profiles(query_mean, ref.mean);
    }
    const auto bins = rotated_bins(ref, shift);
    const PairShape shape = cross_recurrence_core(query, bins.data(), ref.n_frames, params, ws);
    const double score =
        qmax_score_raw(ws.bits.data(), shape.rows, shape.cols, params.gap_onset,
                       params.gap_extend);
    return qmax_distance_from_score(score, shape.cols, params.sqrt_normalization);
}

double qmax_distance(PcpView query, PcpView ref, const QmaxParams& params, QmaxWorkspace& ws) {
    return qmax_distance(query, mean_profile(query), prepare_reference(ref), params, ws);
}

double qmax_distance(PcpView query, PcpView ref, const QmaxParams& params) {
    QmaxWorkspace ws;
    return qmax_distance(query, ref, params, ws);
}

} // namespace sli
