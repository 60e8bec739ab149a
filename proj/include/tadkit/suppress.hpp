#ifndef TADKIT_SUPPRESS_HPP
#define TADKIT_SUPPRESS_HPP

#include <vector>

#include "tadkit/types.hpp"

namespace tadkit {

// Deterministic detection order: score desc, then earlier start, then the
// original position. All suppression runs per class on pre-sorted input.
std::vector<size_t> score_order(const std::vector<Detection>& dets);

// Greedy non-maximum suppression at the given tIoU threshold.
std::vector<Detection> nms(const std::vector<Detection>& dets, double tiou_thr);

// Non-maximum weighting: NMS-style clusters, one output per cluster whose
// boundaries are the score-and-overlap weighted mean of the members
// (weights score_i * tiou(member, seed); the seed weighs its own score).
std::vector<Detection> nmw(const std::vector<Detection>& dets, double tiou_thr);

}  // namespace tadkit

#endif
