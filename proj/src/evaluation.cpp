#include "sli/evaluation.hpp"

#include "sli/errors.hpp"
#include "sli/textio.hpp"

#include <algorithm>
#include <sstream>

namespace sli {

EvalCounts& EvalCounts::operator+=(const EvalCounts& other) {
    tp += other.tp;
    fp += other.fp;
    total_annotations += other.total_annotations;
    total_annotated_s += other.total_annotated_s;
    detected_annotations += other.detected_annotations;
    matched_length_s += other.matched_length_s;
    return *this;
}

EvalCounts evaluate(std::span<const Segment> segments,
                    std::span<const Annotation> annotations) {
    std::vector<const Segment*> sorted;
    sorted.reserve(segments.size());
    for (const auto& s : segments)
        sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(),
              [](const Segment* a, const Segment* b) { return a->start_s < b->start_s; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i]->start_s < sorted[i - 1]->end_s)
            throw OverlappingSegments("segments '" + sorted[i - 1]->ref_id + "' and '" +
                                      sorted[i]->ref_id + "' overlap");

    EvalCounts out;
    out.total_annotations = static_cast<long>(annotations.size());
    for (const auto& a : annotations)
        out.total_annotated_s += a.end_s - a.start_s;

    std::vector<bool> detected(annotations.size(), false);
    for (const Segment* s : sorted) {
        bool is_tp = false;
        for (std::size_t ai = 0; ai < annotations.size(); ++ai) {
            const Annotation& a = annotations[ai];
            if (a.song_id != s->ref_id)
                continue;
            const double lo = std::max(s->start_s, a.start_s);
            const double hi = std::min(s->end_s, a.end_s);
            if (hi - lo > 0.0) {
                is_tp = true;
                detected[ai] = true;
                out.matched_length_s += hi - lo;
            }
        }
        if (is_tp)
            ++out.tp;
        else
            ++out.fp;
    }
    for (const bool d : detected)
        out.detected_annotations += d ? 1 : 0;
    return out;
}

EvalReport aggregate(const std::vector<std::pair<std::string, EvalCounts>>& per_concert,
                     const CatalogManifest& manifest) {
    EvalReport report;
    report.per_concert = per_concert;
    std::sort(report.per_concert.begin(), report.per_concert.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [concert_id, counts] : report.per_concert) {
        const ConcertEntry* entry = manifest.find_concert(concert_id);
        if (entry == nullptr)
            throw UnknownConcert("concert '" + concert_id + "' not in manifest");
        report.total += counts;
        report.by_quality[to_string(entry->audio_quality)] += counts;
        report.by_genre[to_string(entry->genre)] += counts;
    }
    return report;
}

namespace {

void csv_row(std::ostringstream& ss, const std::string& concert, const std::string& group,
             const EvalCounts& c) {
    ss << concert << ',' << group << ',' << c.tp << ',' << c.fp << ','
       << format_double(c.dap()) << ',' << format_double(c.dlp()) << ','
       << c.total_annotations << ',' << format_double(c.total_annotated_s) << '\n';
}

} // namespace

std::string report_csv(const EvalReport& report) {
    std::ostringstream ss;
    ss << "concert_id,group,TP,FP,DAP,DLP,TA,TL\n";
    for (const auto& [id, counts] : report.per_concert)
        csv_row(ss, id, "-", counts);
    for (const auto& [group, counts] : report.by_quality)
        csv_row(ss, "-", group, counts);
    for (const auto& [group, counts] : report.by_genre)
        csv_row(ss, "-", group, counts);
    csv_row(ss, "-", "total", report.total);
    return ss.str();
}

namespace {

void text_row(std::ostringstream& ss, const std::string& label, const EvalCounts& c) {
    ss << label << ": TP=" << c.tp << " FP=" << c.fp << " DAP=" << format_double(c.dap())
       << " DLP=" << format_double(c.dlp()) << " TA=" << c.total_annotations
       << " TL=" << format_double(c.total_annotated_s) << "\n";
}

} // namespace

std::string report_text(const EvalReport& report) {
    std::ostringstream ss;
    for (const auto& [id, counts] : report.per_concert)
        text_row(ss, "concert " + id, counts);
    for (const auto& [group, counts] : report.by_quality)
        text_row(ss, "quality " + group, counts);
    for (const auto& [group, counts] : report.by_genre)
        text_row(ss, "genre " + group, counts);
    text_row(ss, "total", report.total);
    return ss.str();
}

} // namespace sli
