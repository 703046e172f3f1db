#pragma once

#include <cstdint>
#include <vector>

#include "scod/tensor.hpp"

namespace scod {

// Axis-aligned rectangle in normalized center form.
struct Box {
    double cx = 0.0, cy = 0.0; // center, fraction of image
    double w = 0.0, h = 0.0;   // extents in (0,1]

    double xmin() const { return cx - w / 2.0; }
    double ymin() const { return cy - h / 2.0; }
    double xmax() const { return cx + w / 2.0; }
    double ymax() const { return cy + h / 2.0; }

    static Box from_corners(double x0, double y0, double x1, double y1) {
        return Box{(x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0};
    }
};

double iou(const Box& a, const Box& b);

// Per feature map: grid size and the aspect ratios tiled in each cell.
// Boxes per cell = aspects.size() + 1 (the extra sqrt-scale box).
struct MapLayout {
    std::size_t grid = 1;
    std::vector<double> aspects{1.0};
};

struct DefaultBoxBank {
    std::vector<Box> boxes;
    std::vector<MapLayout> layout;
    std::vector<std::size_t> map_offsets; // first anchor index per map

    std::size_t boxes_per_cell(std::size_t map) const { return layout[map].aspects.size() + 1; }
};

// Tile default boxes over every map. Scale for map i of m is
// s_min + (s_max - s_min) * i/(m-1); per cell one box per aspect ratio at
// that scale plus one extra square box at sqrt(s_i * s_{i+1}). Extents are
// clamped to 1.
DefaultBoxBank generate_default_boxes(const std::vector<MapLayout>& layout, double s_min,
                                      double s_max);

// The canonical 300x300 six-map configuration: grids 38/19/10/5/3/1 with
// 4/6/6/6/4/4 boxes per cell, 8732 anchors total.
std::vector<MapLayout> reference_box_layout();

struct Variances {
    double center = 0.1;
    double size = 0.2;
};

struct MatchResult {
    std::vector<int> anchor_gt;   // per anchor: -1 background, else gt index
    Tensor offsets;               // [anchors x 4] encoded (tx,ty,tw,th), matched rows only
    std::vector<int> gt_class;    // class id per gt, 1-based (0 reserved for background)
    std::size_t matched_count = 0;
};

// Anchors match the GT of highest IoU when >= threshold; in addition every
// GT claims its best still-unclaimed anchor unconditionally (ties: lowest
// anchor index), so no GT is left unmatched.
MatchResult match_and_encode(const DefaultBoxBank& bank,
                             const std::vector<std::pair<Box, int>>& gts, double iou_threshold,
                             const Variances& var, int class_count);

// Offset encoding used by match_and_encode; exact inverse of decode_box.
void encode_offsets(const Box& anchor, const Box& gt, const Variances& var, double* out4);
Box decode_box(const Box& anchor, const double* off4, const Variances& var);

// Rejects non-finite offsets.
std::vector<Box> decode_boxes(const DefaultBoxBank& bank, const Tensor& offsets,
                              const Variances& var);

struct Detection {
    Box box;
    int class_id = 0;
    double score = 0.0;
};

// Greedy per class by descending score (ties: lower input index first);
// suppresses same-class boxes with IoU > threshold against a kept box; at
// most top_k survive overall. Output sorted by descending score.
std::vector<Detection> nms(const std::vector<Detection>& detections, double iou_threshold,
                           std::size_t top_k);

struct MultiboxLoss {
    double loss = 0.0;
    double conf_loss = 0.0;
    double loc_loss = 0.0;
    Tensor grad_conf; // [anchors x (C+1)]
    Tensor grad_loc;  // [anchors x 4]
    std::size_t hard_negatives = 0;
};

// (softmax cross-entropy over positives + hardest negatives at neg_ratio
// per positive, plus smooth-L1 over positives) / max(1, matched).
MultiboxLoss multibox_loss(const Tensor& conf, const Tensor& loc, const MatchResult& match,
                           double neg_ratio);

} // namespace scod
