#include "scod/multibox.hpp"

#include "scod/conv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace scod {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

} // namespace

double iou(const Box& a, const Box& b) {
    const double ix = std::min(a.xmax(), b.xmax()) - std::max(a.xmin(), b.xmin());
    const double iy = std::min(a.ymax(), b.ymax()) - std::max(a.ymin(), b.ymin());
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    // areas from the same corner arithmetic as the intersection, so
    // identical boxes give exactly 1
    const double area_a = (a.xmax() - a.xmin()) * (a.ymax() - a.ymin());
    const double area_b = (b.xmax() - b.xmin()) * (b.ymax() - b.ymin());
    return inter / (area_a + area_b - inter);
}

DefaultBoxBank generate_default_boxes(const std::vector<MapLayout>& layout, double s_min,
                                      double s_max) {
    require(!layout.empty(), "generate_default_boxes: empty layout");
    require(s_min > 0.0 && s_max <= 1.0 && s_min < s_max,
            "generate_default_boxes: scales must satisfy 0 < s_min < s_max <= 1");
    for (const MapLayout& m : layout) {
        require(m.grid >= 1, "generate_default_boxes: grid size must be >= 1");
        require(!m.aspects.empty(), "generate_default_boxes: a map with no aspect ratios");
    }
    const std::size_t maps = layout.size();
    auto scale = [&](std::size_t i) {
        if (maps == 1) return i == 0 ? s_min : s_max;
        return s_min + (s_max - s_min) * static_cast<double>(i) / static_cast<double>(maps - 1);
    };

    DefaultBoxBank bank;
    bank.layout = layout;
    for (std::size_t mi = 0; mi < maps; ++mi) {
        bank.map_offsets.push_back(bank.boxes.size());
        const std::size_t f = layout[mi].grid;
        const double s_k = scale(mi);
        const double s_extra = std::sqrt(s_k * scale(mi + 1));
        for (std::size_t row = 0; row < f; ++row) {
            for (std::size_t col = 0; col < f; ++col) {
                const double cx = (static_cast<double>(col) + 0.5) / static_cast<double>(f);
                const double cy = (static_cast<double>(row) + 0.5) / static_cast<double>(f);
                for (double a : layout[mi].aspects) {
                    require(a > 0.0, "generate_default_boxes: aspect ratio must be positive");
                    const double w = std::min(1.0, s_k * std::sqrt(a));
                    const double h = std::min(1.0, s_k / std::sqrt(a));
                    bank.boxes.push_back(Box{cx, cy, w, h});
                }
                const double e = std::min(1.0, s_extra);
                bank.boxes.push_back(Box{cx, cy, e, e});
            }
        }
    }
    return bank;
}

std::vector<MapLayout> reference_box_layout() {
    const std::vector<double> narrow{1.0, 2.0, 0.5};
    const std::vector<double> wide{1.0, 2.0, 0.5, 3.0, 1.0 / 3.0};
    return {
        MapLayout{38, narrow}, MapLayout{19, wide}, MapLayout{10, wide},
        MapLayout{5, wide},    MapLayout{3, narrow}, MapLayout{1, narrow},
    };
}

void encode_offsets(const Box& anchor, const Box& gt, const Variances& var, double* out4) {
    out4[0] = (gt.cx - anchor.cx) / (anchor.w * var.center);
    out4[1] = (gt.cy - anchor.cy) / (anchor.h * var.center);
    out4[2] = std::log(gt.w / anchor.w) / var.size;
    out4[3] = std::log(gt.h / anchor.h) / var.size;
}

Box decode_box(const Box& anchor, const double* off4, const Variances& var) {
    Box b;
    b.cx = anchor.cx + off4[0] * var.center * anchor.w;
    b.cy = anchor.cy + off4[1] * var.center * anchor.h;
    b.w = anchor.w * std::exp(off4[2] * var.size);
    b.h = anchor.h * std::exp(off4[3] * var.size);
    return b;
}

MatchResult match_and_encode(const DefaultBoxBank& bank,
                             const std::vector<std::pair<Box, int>>& gts, double iou_threshold,
                             const Variances& var, int class_count) {
    require(iou_threshold > 0.0 && iou_threshold < 1.0,
            "match_and_encode: iou_threshold must lie in (0,1)");
    const std::size_t A = bank.boxes.size();
    require(A > 0, "match_and_encode: empty anchor bank");
    for (const auto& [box, cls] : gts)
        require(cls >= 1 && cls <= class_count,
                "match_and_encode: gt class " + std::to_string(cls) +
                    " outside configured class set [1," + std::to_string(class_count) + "]");

    MatchResult res;
    res.anchor_gt.assign(A, -1);
    res.offsets = Tensor({A, 4});
    for (const auto& [box, cls] : gts) res.gt_class.push_back(cls);

    if (gts.empty()) return res;

    // IoU of every anchor against every gt.
    std::vector<double> overlap(A * gts.size());
    for (std::size_t a = 0; a < A; ++a)
        for (std::size_t g = 0; g < gts.size(); ++g)
            overlap[a * gts.size() + g] = iou(bank.boxes[a], gts[g].first);

    // Every gt first claims its best still-unclaimed anchor (ties: lowest
    // anchor index), so each gt keeps at least one anchor.
    std::vector<char> forced(A, 0);
    for (std::size_t g = 0; g < gts.size(); ++g) {
        double best = -1.0;
        std::size_t best_a = 0;
        bool found = false;
        for (std::size_t a = 0; a < A; ++a) {
            if (forced[a]) continue;
            const double o = overlap[a * gts.size() + g];
            if (o > best) {
                best = o;
                best_a = a;
                found = true;
            }
        }
        if (found) {
            forced[best_a] = 1;
            res.anchor_gt[best_a] = static_cast<int>(g);
        }
    }

    // Remaining anchors take their best gt when IoU clears the threshold.
    for (std::size_t a = 0; a < A; ++a) {
        if (forced[a]) continue;
        double best = -1.0;
        std::size_t best_g = 0;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            const double o = overlap[a * gts.size() + g];
            if (o > best) {
                best = o;
                best_g = g;
            }
        }
        if (best >= iou_threshold) res.anchor_gt[a] = static_cast<int>(best_g);
    }

    for (std::size_t a = 0; a < A; ++a) {
        if (res.anchor_gt[a] < 0) continue;
        ++res.matched_count;
        encode_offsets(bank.boxes[a], gts[static_cast<std::size_t>(res.anchor_gt[a])].first, var,
                       &res.offsets.data[a * 4]);
    }
    return res;
}

std::vector<Box> decode_boxes(const DefaultBoxBank& bank, const Tensor& offsets,
                              const Variances& var) {
    require(offsets.rank() == 2 && offsets.shape[1] == 4 &&
                offsets.shape[0] == bank.boxes.size(),
            "decode_boxes: offsets " + offsets.shape_string() + " must be [" +
                std::to_string(bank.boxes.size()) + "x4]");
    for (std::size_t i = 0; i < offsets.data.size(); ++i)
        require(std::isfinite(offsets.data[i]),
                "decode_boxes: non-finite offset at flat index " + std::to_string(i));
    std::vector<Box> out(bank.boxes.size());
    for (std::size_t a = 0; a < bank.boxes.size(); ++a)
        out[a] = decode_box(bank.boxes[a], &offsets.data[a * 4], var);
    return out;
}

std::vector<Detection> nms(const std::vector<Detection>& detections, double iou_threshold,
                           std::size_t top_k) {
    for (const Detection& d : detections)
        require(std::isfinite(d.score), "nms: non-finite score");
    if (top_k == 0) return {};

    // stable sort keeps input order among equal scores
    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return detections[a].score > detections[b].score;
    });

    std::vector<std::size_t> kept;
    for (std::size_t idx : order) {
        const Detection& d = detections[idx];
        bool suppressed = false;
        for (std::size_t kidx : kept) {
            const Detection& kd = detections[kidx];
            if (kd.class_id != d.class_id) continue;
            if (iou(kd.box, d.box) > iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(idx);
    }
    if (kept.size() > top_k) kept.resize(top_k);

    std::vector<Detection> out;
    out.reserve(kept.size());
    for (std::size_t idx : kept) out.push_back(detections[idx]);
    return out;
}

MultiboxLoss multibox_loss(const Tensor& conf, const Tensor& loc, const MatchResult& match,
                           double neg_ratio) {
    require(conf.rank() == 2, "multibox_loss: conf must be anchors x classes");
    require(loc.rank() == 2 && loc.shape[1] == 4, "multibox_loss: loc must be anchors x 4");
    const std::size_t A = conf.shape[0];
    require(A > 0, "multibox_loss: no anchors");
    require(loc.shape[0] == A && match.anchor_gt.size() == A,
            "multibox_loss: anchor counts disagree (conf " + std::to_string(A) + ", loc " +
                std::to_string(loc.shape[0]) + ", match " +
                std::to_string(match.anchor_gt.size()) + ")");
    const std::size_t K = conf.shape[1]; // C+1, background first
    require(K >= 2, "multibox_loss: need at least one foreground class");
    require(neg_ratio >= 0.0, "multibox_loss: neg_ratio must be >= 0");

    const Tensor prob = softmax_rows(conf);

    MultiboxLoss out;
    out.grad_conf = Tensor({A, K});
    out.grad_loc = Tensor({A, 4});

    // localization: smooth-L1 between predictions and encoded targets over
    // matched anchors
    std::size_t n_pos = 0;
    for (std::size_t a = 0; a < A; ++a) {
        if (match.anchor_gt[a] < 0) continue;
        ++n_pos;
        for (std::size_t c = 0; c < 4; ++c) {
            const double d = loc(a, c) - match.offsets(a, c);
            if (std::abs(d) < 1.0) {
                out.loc_loss += 0.5 * d * d;
                out.grad_loc(a, c) = d;
            } else {
                out.loc_loss += std::abs(d) - 0.5;
                out.grad_loc(a, c) = d > 0.0 ? 1.0 : -1.0;
            }
        }
    }

    // classification: positives at their gt class, plus the hardest
    // negatives (ranked by background cross-entropy) at neg_ratio per
    // positive; a clamped one-positive budget applies when nothing matched
    std::vector<std::pair<double, std::size_t>> negatives;
    for (std::size_t a = 0; a < A; ++a) {
        if (match.anchor_gt[a] >= 0) {
            const int cls = match.gt_class[static_cast<std::size_t>(match.anchor_gt[a])];
            out.conf_loss += -std::log(prob(a, static_cast<std::size_t>(cls)));
            for (std::size_t c = 0; c < K; ++c)
                out.grad_conf(a, c) =
                    prob(a, c) - (c == static_cast<std::size_t>(cls) ? 1.0 : 0.0);
        } else {
            negatives.emplace_back(-std::log(prob(a, 0)), a);
        }
    }
    const std::size_t budget = static_cast<std::size_t>(
        neg_ratio * static_cast<double>(std::max<std::size_t>(1, n_pos)));
    const std::size_t n_neg = std::min(budget, negatives.size());
    std::stable_sort(negatives.begin(), negatives.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    for (std::size_t i = 0; i < n_neg; ++i) {
        const std::size_t a = negatives[i].second;
        out.conf_loss += negatives[i].first;
        for (std::size_t c = 0; c < K; ++c)
            out.grad_conf(a, c) = prob(a, c) - (c == 0 ? 1.0 : 0.0);
    }
    out.hard_negatives = n_neg;

    const double denom = static_cast<double>(std::max<std::size_t>(1, n_pos));
    out.conf_loss /= denom;
    out.loc_loss /= denom;
    out.loss = out.conf_loss + out.loc_loss;
    for (double& g : out.grad_conf.data) g /= denom;
    for (double& g : out.grad_loc.data) g /= denom;
    return out;
}

} // namespace scod
