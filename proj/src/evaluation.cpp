#include "tadkit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "tadkit/errors.hpp"
#include "tadkit/geometry.hpp"

namespace tadkit {

double average_precision(const ClassDetections& dets,
                         const std::vector<std::vector<Interval>>& gts_per_video, double thr) {
    size_t n_gt = 0;
    for (const auto& g : gts_per_video) n_gt += g.size();
    if (n_gt == 0) return std::numeric_limits<double>::quiet_NaN();

    std::vector<size_t> order(dets.score.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (dets.score[a] != dets.score[b]) return dets.score[a] > dets.score[b];
        if (dets.interval[a].start != dets.interval[b].start) {
            return dets.interval[a].start < dets.interval[b].start;
        }
        return a < b;
    });

    std::vector<std::vector<bool>> used(gts_per_video.size());
    for (size_t v = 0; v < gts_per_video.size(); ++v) used[v].assign(gts_per_video[v].size(), false);

    std::vector<bool> is_tp(order.size(), false);
    for (size_t oi = 0; oi < order.size(); ++oi) {
        const size_t i = order[oi];
        const auto& gts = gts_per_video[dets.video[i]];
        auto& u = used[dets.video[i]];
        double best = -1.0;
        int best_j = -1;
        for (size_t j = 0; j < gts.size(); ++j) {
            if (u[j]) continue;
            const double t = tiou(dets.interval[i], gts[j]);
            if (t > best) { best = t; best_j = static_cast<int>(j); }
        }
        if (best_j >= 0 && best >= thr) {
            is_tp[oi] = true;
            u[best_j] = true;
        }
    }

    // All-point interpolation: walk the PR points, monotonize precision from
    // the right, integrate over recall increments.
    std::vector<double> recall(order.size()), precision(order.size());
    size_t tp = 0;
    for (size_t k = 0; k < order.size(); ++k) {
        tp += is_tp[k] ? 1 : 0;
        recall[k] = static_cast<double>(tp) / static_cast<double>(n_gt);
        precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    }
    double ap = 0.0, pmax = 0.0;
    for (size_t k = order.size(); k-- > 0;) {
        pmax = std::max(pmax, precision[k]);
        const double r_prev = k == 0 ? 0.0 : recall[k - 1];
        ap += (recall[k] - r_prev) * pmax;
    }
    return ap;
}

EvalResult evaluate(const DetectionMap& dets, const std::vector<VideoAnnotation>& annotations,
                    const EvalConfig& cfg, int num_classes) {
    std::map<std::string, int> video_index;
    for (size_t v = 0; v < annotations.size(); ++v) {
        video_index[annotations[v].video_id] = static_cast<int>(v);
    }
    for (const auto& [vid, _] : dets) {
        if (!video_index.count(vid)) {
            throw DataError("detections reference unknown video '" + vid + "'");
        }
    }

    EvalResult r;
    r.thresholds = cfg.tiou_thresholds;
    r.ap.assign(cfg.tiou_thresholds.size(), std::vector<double>(num_classes, 0.0));
    r.map_per_threshold.assign(cfg.tiou_thresholds.size(), 0.0);

    for (int c = 0; c < num_classes; ++c) {
        ClassDetections cd;
        for (const auto& [vid, vdets] : dets) {
            const int vi = video_index.at(vid);
            for (const auto& d : vdets) {
                if (d.class_id != c) continue;
                cd.video.push_back(vi);
                cd.interval.push_back(d.interval);
                cd.score.push_back(d.score);
            }
        }
        std::vector<std::vector<Interval>> gts(annotations.size());
        for (size_t v = 0; v < annotations.size(); ++v) {
            for (const auto& inst : annotations[v].instances) {
                if (inst.class_id == c) gts[v].push_back(inst.interval);
            }
        }
        for (size_t ti = 0; ti < cfg.tiou_thresholds.size(); ++ti) {
            r.ap[ti][c] = average_precision(cd, gts, cfg.tiou_thresholds[ti]);
        }
    }

    double avg_sum = 0.0;
    for (size_t ti = 0; ti < cfg.tiou_thresholds.size(); ++ti) {
        double sum = 0.0;
        int counted = 0;
        for (int c = 0; c < num_classes; ++c) {
            if (!std::isnan(r.ap[ti][c])) { sum += r.ap[ti][c]; ++counted; }
        }
        r.map_per_threshold[ti] = counted > 0 ? sum / counted : 0.0;
        avg_sum += r.map_per_threshold[ti];
    }
    r.avg = avg_sum / static_cast<double>(cfg.tiou_thresholds.size());
    return r;
}

std::string eval_table_text(const EvalResult& r) {
    char buf[128];
    std::string out = "tIoU     mAP\n";
    for (size_t i = 0; i < r.thresholds.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.2f  %.6f\n", r.thresholds[i],
                      r.map_per_threshold[i]);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "Avg   %.6f\n", r.avg);
    out += buf;
    return out;
}

json eval_to_json(const EvalResult& r) {
    json j;
    j["thresholds"] = r.thresholds;
    j["map"] = r.map_per_threshold;
    j["avg"] = r.avg;
    json per_class = json::array();
    for (size_t ti = 0; ti < r.thresholds.size(); ++ti) {
        json row = json::array();
        for (double ap : r.ap[ti]) {
            if (std::isnan(ap)) row.push_back(nullptr);
            else row.push_back(ap);
        }
        per_class.push_back(row);
    }
    j["ap_per_class"] = per_class;
    return j;
}

}  // namespace tadkit
