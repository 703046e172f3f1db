#include "scod/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace scod {

double average_precision(const std::vector<ScoredBox>& detections,
                         const std::vector<GtBox>& gts, double iou_threshold,
                         ApProtocol protocol, std::size_t* out_tp, std::size_t* out_fp,
                         std::size_t* out_gt) {
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0))
        throw std::invalid_argument("average_precision: iou_threshold must lie in (0,1)");

    std::size_t total_gt = 0;
    for (const GtBox& g : gts)
        if (!g.difficult) ++total_gt;
    if (out_gt) *out_gt = total_gt;

    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return detections[a].score > detections[b].score;
    });

    std::vector<char> claimed(gts.size(), 0);
    std::vector<char> outcome; // 1 TP, 0 FP; ignored detections omitted
    outcome.reserve(detections.size());
    for (std::size_t idx : order) {
        const ScoredBox& d = detections[idx];
        double best = -1.0;
        std::size_t best_g = 0;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (gts[g].image_id != d.image_id) continue;
            const double o = iou(d.box, gts[g].box);
            if (o > best) {
                best = o;
                best_g = g;
            }
        }
        if (best >= iou_threshold) {
            if (gts[best_g].difficult) continue; // neither TP nor FP
            if (!claimed[best_g]) {
                claimed[best_g] = 1;
                outcome.push_back(1);
            } else {
                outcome.push_back(0); // gt credited at most once
            }
        } else {
            outcome.push_back(0);
        }
    }

    std::size_t tp = 0, fp = 0;
    std::vector<double> precision, recall;
    for (char o : outcome) {
        if (o)
            ++tp;
        else
            ++fp;
        precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        recall.push_back(total_gt == 0 ? 0.0
                                       : static_cast<double>(tp) / static_cast<double>(total_gt));
    }
    if (out_tp) *out_tp = tp;
    if (out_fp) *out_fp = fp;

    if (total_gt == 0) return 0.0; // caller excludes such classes
    if (outcome.empty()) return 0.0;

    // precision envelope (monotone from the right)
    std::vector<double> env = precision;
    for (std::size_t i = env.size() - 1; i-- > 0;) env[i] = std::max(env[i], env[i + 1]);

    if (protocol == ApProtocol::AllPoint) {
        double ap = 0.0;
        double prev_r = 0.0;
        for (std::size_t i = 0; i < env.size(); ++i) {
            if (recall[i] > prev_r) {
                ap += (recall[i] - prev_r) * env[i];
                prev_r = recall[i];
            }
        }
        return ap;
    }
    // 11-point: mean of max precision at recall >= r
    double ap = 0.0;
    for (int k = 0; k <= 10; ++k) {
        const double r = k / 10.0;
        double p = 0.0;
        for (std::size_t i = 0; i < env.size(); ++i)
            if (recall[i] >= r) {
                p = env[i];
                break;
            }
        ap += p;
    }
    return ap / 11.0;
}

EvalReport mean_average_precision(
    const std::map<std::string, std::vector<ScoredBox>>& per_class_detections,
    const std::map<std::string, std::vector<GtBox>>& per_class_gts, double iou_threshold,
    ApProtocol protocol) {
    EvalReport rep;
    rep.protocol = protocol;

    // union of class names, ordered (std::map iteration is sorted)
    std::map<std::string, char> names;
    for (const auto& [name, v] : per_class_detections) names[name] = 1;
    for (const auto& [name, v] : per_class_gts) names[name] = 1;

    static const std::vector<ScoredBox> no_dets;
    static const std::vector<GtBox> no_gts;
    double sum = 0.0;
    std::size_t defined = 0;
    for (const auto& [name, unused] : names) {
        const auto dit = per_class_detections.find(name);
        const auto git = per_class_gts.find(name);
        const auto& dets = dit == per_class_detections.end() ? no_dets : dit->second;
        const auto& gts = git == per_class_gts.end() ? no_gts : git->second;

        ClassEval ce;
        ce.class_name = name;
        ce.ap = average_precision(dets, gts, iou_threshold, protocol, &ce.tp, &ce.fp,
                                  &ce.total_gt);
        ce.defined = ce.total_gt > 0;
        if (ce.defined) {
            sum += ce.ap;
            ++defined;
        } else {
            rep.excluded.push_back(name);
        }
        rep.per_class.push_back(std::move(ce));
    }
    if (defined == 0)
        throw std::invalid_argument("mean_average_precision: no class has any ground truth");
    rep.map = sum / static_cast<double>(defined);
    return rep;
}

std::string report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["protocol"] = r.protocol == ApProtocol::AllPoint ? "allpoint" : "11point";
    j["classes"] = nlohmann::json::array();
    for (const ClassEval& c : r.per_class) {
        nlohmann::json cj;
        cj["class"] = c.class_name;
        cj["ap"] = c.ap;
        cj["defined"] = c.defined;
        cj["tp"] = c.tp;
        cj["fp"] = c.fp;
        cj["total_gt"] = c.total_gt;
        j["classes"].push_back(cj);
    }
    j["map"] = r.map;
    j["excluded"] = r.excluded;
    return j.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& r) {
    std::size_t w = 12;
    for (const ClassEval& c : r.per_class) w = std::max(w, c.class_name.size() + 2);
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(w)) << "Class"
        << "AP (%)\n";
    for (const ClassEval& c : r.per_class) {
        out << std::left << std::setw(static_cast<int>(w)) << c.class_name;
        if (c.defined)
            out << std::fixed << std::setprecision(2) << 100.0 * c.ap << "\n";
        else
            out << "(no ground truth)\n";
    }
    out << std::left << std::setw(static_cast<int>(w)) << "Overall" << std::fixed
        << std::setprecision(2) << 100.0 * r.map << "\n";
    return out.str();
}

std::string report_to_csv(const EvalReport& r) {
    std::ostringstream out;
    out << "class,ap,tp,fp,total_gt\n";
    for (const ClassEval& c : r.per_class)
        out << c.class_name << "," << c.ap << "," << c.tp << "," << c.fp << "," << c.total_gt
            << "\n";
    out << "overall," << r.map << ",,,\n";
    return out.str();
}

} // namespace scod
