#include "sli/postprocess.hpp"

#include "sli/errors.hpp"
#include "sli/rng.hpp"
#include "sli/textio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sli {

namespace {

struct Piece {
    std::size_t seg = 0; // owning step-1 segment
    double start = 0.0;
    double end = 0.0;
};

} // namespace

std::vector<Segment> consolidate(std::span<const RawMatch> matches, double frame_duration_s) {
    if (matches.empty())
        return {};
    for (std::size_t i = 0; i < matches.size(); ++i) {
        if (i > 0 && matches[i].window_index < matches[i - 1].window_index)
            throw UnsortedInput("raw matches must be sorted by window index");
        if (!(matches[i].start_s < matches[i].end_s))
            throw NegativeDuration("raw match has no duration");
        if (matches[i].distance < 0.0)
            throw ValueOutOfRange("raw match distance below zero");
    }
    const double tol = frame_duration_s;

    // Step 1: runs of consecutive same-reference matches that overlap or
    // abut collapse into one segment with the lowest distance.
    std::vector<Segment> merged;
    for (const auto& m : matches) {
        if (!merged.empty() && merged.back().ref_id == m.ref_id &&
            m.start_s <= merged.back().end_s + tol) {
            merged.back().end_s = std::max(merged.back().end_s, m.end_s);
            merged.back().distance = std::min(merged.back().distance, m.distance);
        } else {
            merged.push_back(Segment{m.ref_id, m.start_s, m.end_s, m.distance});
        }
    }

    // Step 2: cut at all breakpoints and resolve every covered piece to
    // the lowest-distance covering segment.
    std::vector<double> breaks;
    breaks.reserve(merged.size() * 2);
    for (const auto& s : merged) {
        breaks.push_back(s.start_s);
        breaks.push_back(s.end_s);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    std::vector<Piece> pieces;
    for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
        const double lo = breaks[b];
        const double hi = breaks[b + 1];
        std::size_t winner = merged.size();
        for (std::size_t s = 0; s < merged.size(); ++s) {
            if (merged[s].start_s <= lo && merged[s].end_s >= hi) {
                if (winner == merged.size())
                    winner = s;
                else {
                    const Segment& a = merged[s];
                    const Segment& w = merged[winner];
                    // deterministic preference: distance, then id, then start
                    if (a.distance < w.distance ||
                        (a.distance == w.distance &&
                         (a.ref_id < w.ref_id ||
                          (a.ref_id == w.ref_id && a.start_s < w.start_s))))
                        winner = s;
                }
            }
        }
        if (winner == merged.size())
            continue; // uncovered gap between matches
        if (!pieces.empty() && pieces.back().seg == winner && pieces.back().end == lo)
            pieces.back().end = hi;
        else
            pieces.push_back(Piece{winner, lo, hi});
    }

    // Discard slivers below one frame.
    std::vector<Segment> parts;
    for (const auto& p : pieces) {
        if (p.end - p.start < frame_duration_s)
            continue;
        parts.push_back(Segment{merged[p.seg].ref_id, p.start, p.end, merged[p.seg].distance});
    }

    // Step 3: re-join same-reference neighbors separated by at most one
    // frame (pieces of one segment split around a discarded sliver).
    std::vector<Segment> out;
    for (const auto& s : parts) {
        if (!out.empty() && out.back().ref_id == s.ref_id &&
            s.start_s - out.back().end_s <= tol) {
            out.back().end_s = s.end_s;
            out.back().distance = std::min(out.back().distance, s.distance);
        } else {
            out.push_back(s);
        }
    }

    // A truncated segment may have inherited its run minimum from a span
    // it no longer covers; settle every distance as the minimum over the
    // same-reference matches that actually overlap the segment. Every
    // surviving span overlaps at least one match of its own run.
    for (auto& s : out) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& m : matches) {
            if (m.ref_id != s.ref_id)
                continue;
            if (std::min(m.end_s, s.end_s) - std::max(m.start_s, s.start_s) > 0.0)
                best = std::min(best, m.distance);
        }
        if (std::isfinite(best))
            s.distance = best;
    }
    return out;
}

std::vector<std::pair<Segment, bool>> label_segments(std::span<const Segment> segments,
                                                     std::span<const Annotation> annotations) {
    std::vector<std::pair<Segment, bool>> out;
    out.reserve(segments.size());
    for (const auto& s : segments) {
        bool correct = false;
        for (const auto& a : annotations) {
            if (a.song_id != s.ref_id)
                continue;
            const double lo = std::max(s.start_s, a.start_s);
            const double hi = std::min(s.end_s, a.end_s);
            if (hi - lo > 0.0) {
                correct = true;
                break;
            }
        }
        out.emplace_back(s, correct);
    }
    return out;
}

MatchClassifier train_classifier(std::span<const LabeledPoint> samples, std::uint64_t seed,
                                 std::string id) {
    if (samples.size() < 10)
        throw TooFewSamples("classifier training needs >= 10 samples, got " +
                            std::to_string(samples.size()));
    std::size_t positives = 0;
    for (const auto& s : samples)
        positives += s.correct ? 1 : 0;
    if (positives == 0 || positives == samples.size())
        throw SingleClass("classifier training needs both correct and incorrect samples");

    MatchClassifier clf;
    clf.id = std::move(id);
    const double n = static_cast<double>(samples.size());
    for (const auto& s : samples) {
        clf.feature_means[0] += s.distance;
        clf.feature_means[1] += s.duration_s;
    }
    clf.feature_means[0] /= n;
    clf.feature_means[1] /= n;
    for (const auto& s : samples) {
        clf.feature_stds[0] += (s.distance - clf.feature_means[0]) *
                               (s.distance - clf.feature_means[0]);
        clf.feature_stds[1] += (s.duration_s - clf.feature_means[1]) *
                               (s.duration_s - clf.feature_means[1]);
    }
    for (auto& sd : clf.feature_stds) {
        sd = std::sqrt(sd / n);
        if (sd <= 0.0)
            sd = 1.0; // constant feature carries no signal
    }

    std::vector<std::array<double, 2>> z(samples.size());
    std::vector<double> y(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        z[i][0] = (samples[i].distance - clf.feature_means[0]) / clf.feature_stds[0];
        z[i][1] = (samples[i].duration_s - clf.feature_means[1]) / clf.feature_stds[1];
        y[i] = samples[i].correct ? 1.0 : -1.0;
    }

    constexpr double lambda = 1e-3;
    constexpr int epochs = 200;
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;

    Rng rng(seed);
    double w0 = 0.0, w1 = 0.0, b = 0.0;
    std::size_t t = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (const std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const double margin = y[i] * (w0 * z[i][0] + w1 * z[i][1] + b);
            w0 -= eta * lambda * w0;
            w1 -= eta * lambda * w1;
            if (margin < 1.0) {
                w0 += eta * y[i] * z[i][0];
                w1 += eta * y[i] * z[i][1];
                b += eta * y[i];
            }
        }
    }
    clf.weights = {w0, w1};
    clf.bias = b;
    return clf;
}

double classifier_score(const MatchClassifier& clf, double distance, double duration_s) {
    const double z0 = (distance - clf.feature_means[0]) / clf.feature_stds[0];
    const double z1 = (duration_s - clf.feature_means[1]) / clf.feature_stds[1];
    return clf.weights[0] * z0 + clf.weights[1] * z1 + clf.bias;
}

std::vector<std::pair<Segment, bool>> apply_classifier(const MatchClassifier& clf,
                                                       std::span<const Segment> segments) {
    std::vector<std::pair<Segment, bool>> out;
    out.reserve(segments.size());
    for (const auto& s : segments)
        out.emplace_back(s, classifier_score(clf, s.distance, s.end_s - s.start_s) >= 0.0);
    return out;
}

void save_classifier(const MatchClassifier& clf, const std::filesystem::path& path) {
    std::ostringstream ss;
    ss << "classifier_version=1\n";
    ss << "id=" << clf.id << "\n";
    ss << "w_distance=" << format_double(clf.weights[0]) << "\n";
    ss << "w_duration=" << format_double(clf.weights[1]) << "\n";
    ss << "bias=" << format_double(clf.bias) << "\n";
    ss << "mean_distance=" << format_double(clf.feature_means[0]) << "\n";
    ss << "mean_duration=" << format_double(clf.feature_means[1]) << "\n";
    ss << "std_distance=" << format_double(clf.feature_stds[0]) << "\n";
    ss << "std_duration=" << format_double(clf.feature_stds[1]) << "\n";
    write_text_file(path, ss.str());
}

MatchClassifier load_classifier(const std::filesystem::path& path) {
    MatchClassifier clf;
    const std::string text = read_text_file(path);
    for (const auto line : split_lines(text)) {
        if (line.empty())
            continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(path.string() + ": bad classifier line");
        const std::string_view key = line.substr(0, eq);
        const std::string_view value = line.substr(eq + 1);
        if (key == "classifier_version") {
            if (value != "1")
                throw VersionUnsupported("classifier version " + std::string(value));
        } else if (key == "id") clf.id = std::string(value);
        else if (key == "w_distance") clf.weights[0] = parse_double(value);
        else if (key == "w_duration") clf.weights[1] = parse_double(value);
        else if (key == "bias") clf.bias = parse_double(value);
        else if (key == "mean_distance") clf.feature_means[0] = parse_double(value);
        else if (key == "mean_duration") clf.feature_means[1] = parse_double(value);
        else if (key == "std_distance") clf.feature_stds[0] = parse_double(value);
        else if (key == "std_duration") clf.feature_stds[1] = parse_double(value);
        else throw ParseError(path.string() + ": unknown key '" + std::string(key) + "'");
    }
    if (clf.feature_stds[0] <= 0.0 || clf.feature_stds[1] <= 0.0)
        throw ParseError(path.string() + ": feature stds must be positive");
    return clf;
}

} // namespace sli
