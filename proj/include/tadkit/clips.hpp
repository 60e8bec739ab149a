#ifndef TADKIT_CLIPS_HPP
#define TADKIT_CLIPS_HPP

#include <algorithm>
#include <vector>

#include "tadkit/tensor.hpp"
#include "tadkit/types.hpp"

namespace tadkit {

// Copies frames [start, start + clip_frames) of a (channels, frames) feature
// array; frames past the video end stay zero.
template <typename T>
Tensor<T> clip_tensor(const DenseArray& features, int start, int clip_frames) {
    const int channels = static_cast<int>(features.shape[0]);
    const int frames = static_cast<int>(features.shape[1]);
    Tensor<T> out(channels, clip_frames, 1);
    const int copy = std::min(clip_frames, frames - start);
    for (int c = 0; c < channels; ++c) {
        const double* src = features.data.data() + static_cast<size_t>(c) * frames + start;
        T* dst = out.data() + static_cast<size_t>(c) * clip_frames;
        for (int f = 0; f < copy; ++f) dst[f] = static_cast<T>(src[f]);
    }
    return out;
}

// Ground truth relative to a clip window: instances are shifted into window
// time, clipped to its bounds, and dropped when the window covers less than
// keep_fraction of the original extent.
inline std::vector<ActionInstance> window_instances(const std::vector<ActionInstance>& gts,
                                                    double window_start_sec,
                                                    double window_len_sec,
                                                    double keep_fraction) {
    std::vector<ActionInstance> out;
    const Interval window(window_start_sec, window_start_sec + window_len_sec);
    for (const auto& gt : gts) {
        const double overlap = overlap_length(gt.interval, window);
        if (overlap < keep_fraction * gt.interval.length() || overlap <= 0.0) continue;
        const double s = std::max(gt.interval.start, window.start) - window.start;
        const double e = std::min(gt.interval.end, window.end) - window.start;
        out.emplace_back(Interval(s, e), gt.class_id);
    }
    return out;
}

}  // namespace tadkit

#endif
