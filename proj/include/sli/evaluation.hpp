#pragma once

#include "sli/catalog.hpp"
#include "sli/postprocess.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace sli {

// Pooled counters behind TP / FP / DAP / DLP. Numerators and denominators
// are kept so that aggregation pools them instead of averaging ratios.
struct EvalCounts {
    long tp = 0;
    long fp = 0;
    long total_annotations = 0;     // TA
    double total_annotated_s = 0.0; // TL
    long detected_annotations = 0;
    double matched_length_s = 0.0;

    // detected annotations percentage
    double dap() const {
        return total_annotations == 0
                   ? 0.0
                   : static_cast<double>(detected_annotations) /
                         static_cast<double>(total_annotations);
    }
    // detected length percentage, capped at 1
    double dlp() const {
        if (total_annotated_s <= 0.0)
            return 0.0;
        const double r = matched_length_s / total_annotated_s;
        return r > 1.0 ? 1.0 : r;
    }

    EvalCounts& operator+=(const EvalCounts& other);
};

// A segment is a true positive iff it has a positive-length intersection
// with an annotation of the same song (each segment counted once, even
// across several annotations). DLP sums intersection lengths over all
// matching (segment, annotation) pairs. Segments must be disjoint.
EvalCounts evaluate(std::span<const Segment> segments,
                    std::span<const Annotation> annotations);

struct EvalReport {
    EvalCounts total;
    std::vector<std::pair<std::string, EvalCounts>> per_concert;
    std::map<std::string, EvalCounts> by_quality;
    std::map<std::string, EvalCounts> by_genre;
};

// Pools per-concert counts overall and per audio-quality / genre group.
// Throws UnknownConcert for ids absent from the manifest.
EvalReport aggregate(const std::vector<std::pair<std::string, EvalCounts>>& per_concert,
                     const CatalogManifest& manifest);

// One row per concert, then per-group rows, then a total row. Columns:
// concert_id, group, TP, FP, DAP, DLP, TA, TL.
std::string report_csv(const EvalReport& report);
std::string report_text(const EvalReport& report);

} // namespace sli
