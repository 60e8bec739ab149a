#include "tadkit/suppress.hpp"

#include <algorithm>
#include <numeric>

#include "tadkit/geometry.hpp"

namespace tadkit {

std::vector<size_t> score_order(const std::vector<Detection>& dets) {
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
        if (dets[a].interval.start != dets[b].interval.start) {
            return dets[a].interval.start < dets[b].interval.start;
        }
        return a < b;
    });
    return order;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double tiou_thr) {
    const std::vector<size_t> order = score_order(dets);
    std::vector<bool> gone(dets.size(), false);
    std::vector<Detection> keep;
    for (size_t oi = 0; oi < order.size(); ++oi) {
        const size_t i = order[oi];
        if (gone[i]) continue;
        keep.push_back(dets[i]);
        gone[i] = true;
        for (size_t oj = oi + 1; oj < order.size(); ++oj) {
            const size_t j = order[oj];
            if (!gone[j] && tiou(dets[i].interval, dets[j].interval) >= tiou_thr) {
                gone[j] = true;
            }
        }
    }
    return keep;
}

std::vector<Detection> nmw(const std::vector<Detection>& dets, double tiou_thr) {
    const std::vector<size_t> order = score_order(dets);
    std::vector<bool> gone(dets.size(), false);
    std::vector<Detection> out;
    for (size_t oi = 0; oi < order.size(); ++oi) {
        const size_t seed = order[oi];
        if (gone[seed]) continue;
        gone[seed] = true;
        double wsum = dets[seed].score;
        double start = wsum * dets[seed].interval.start;
        double end = wsum * dets[seed].interval.end;
        size_t members = 1;
        for (size_t oj = oi + 1; oj < order.size(); ++oj) {
            const size_t j = order[oj];
            if (gone[j]) continue;
            const double t = tiou(dets[seed].interval, dets[j].interval);
            if (t < tiou_thr) continue;
            gone[j] = true;
            const double w = dets[j].score * t;
            wsum += w;
            start += w * dets[j].interval.start;
            end += w * dets[j].interval.end;
            ++members;
        }
        if (members == 1) {
            out.push_back(dets[seed]);  // singleton cluster passes through untouched
        } else {
            out.emplace_back(Interval(start / wsum, end / wsum), dets[seed].class_id,
                             dets[seed].score);
        }
    }
    return out;
}

}  // namespace tadkit
