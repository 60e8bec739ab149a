#ifndef TADKIT_EVALUATION_HPP
#define TADKIT_EVALUATION_HPP

#include <map>
#include <string>
#include <vector>

#include "tadkit/config.hpp"
#include "tadkit/types.hpp"

namespace tadkit {

// Detections grouped by video id (the on-disk results form).
using DetectionMap = std::map<std::string, std::vector<Detection>>;

struct ClassDetections {
    std::vector<int> video;  // index into the per-video gt table
    std::vector<Interval> interval;
    std::vector<double> score;
};

// Greedy per-video matching in score order (ties: earlier start, then input
// order); TP consumes its best unmatched gt when tIoU >= thr. AP is the
// exact area under the right-monotonized precision-recall curve.
// Returns NaN when the class has no ground truth.
double average_precision(const ClassDetections& dets,
                         const std::vector<std::vector<Interval>>& gts_per_video, double thr);

struct EvalResult {
    std::vector<double> thresholds;
    std::vector<std::vector<double>> ap;  // [threshold][class]; NaN = undefined
    std::vector<double> map_per_threshold;
    double avg = 0.0;
};

EvalResult evaluate(const DetectionMap& dets, const std::vector<VideoAnnotation>& annotations,
                    const EvalConfig& cfg, int num_classes);

std::string eval_table_text(const EvalResult& r);
json eval_to_json(const EvalResult& r);

}  // namespace tadkit

#endif
