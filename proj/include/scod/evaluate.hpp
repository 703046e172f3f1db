#pragma once

#include <map>
#include <string>
#include <vector>

#include "scod/multibox.hpp"

namespace scod {

struct ScoredBox {
    std::string image_id;
    Box box;
    double score = 0.0;
};

struct GtBox {
    std::string image_id;
    Box box;
    bool difficult = false;
};

enum class ApProtocol { AllPoint, ElevenPoint };

struct ClassEval {
    std::string class_name;
    double ap = 0.0;
    bool defined = false; // false when the class has no ground truth
    std::size_t tp = 0, fp = 0, total_gt = 0;
};

struct EvalReport {
    std::vector<ClassEval> per_class; // ordered by class name
    double map = 0.0;                 // mean over defined classes
    ApProtocol protocol = ApProtocol::AllPoint;
    std::vector<std::string> excluded; // classes with zero ground truth
};

// One class: detections sorted by descending score (ties by input order),
// each greedily matched to the unmatched ground truth of highest IoU.
// Matches to difficult ground truth are ignored (neither TP nor FP).
// All-point integrates the precision envelope; 11-point averages the
// envelope at recalls 0, 0.1, ..., 1.
double average_precision(const std::vector<ScoredBox>& detections,
                         const std::vector<GtBox>& gts, double iou_threshold,
                         ApProtocol protocol, std::size_t* out_tp = nullptr,
                         std::size_t* out_fp = nullptr, std::size_t* out_gt = nullptr);

EvalReport mean_average_precision(
    const std::map<std::string, std::vector<ScoredBox>>& per_class_detections,
    const std::map<std::string, std::vector<GtBox>>& per_class_gts, double iou_threshold,
    ApProtocol protocol);

std::string report_to_json(const EvalReport& r);
std::string report_to_table(const EvalReport& r); // aligned class/AP/Overall text
std::string report_to_csv(const EvalReport& r);

} // namespace scod
