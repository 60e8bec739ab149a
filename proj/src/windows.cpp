#include "tadkit/windows.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tadkit/errors.hpp"

namespace tadkit {

namespace {

std::vector<int> forward_starts(int video_frames, int clip_frames, int stride) {
    std::vector<int> starts;
    const int last = std::max(0, video_frames - clip_frames);
    for (int s = 0; s + clip_frames <= video_frames; s += stride) starts.push_back(s);
    if (starts.empty() || starts.back() != last) starts.push_back(last);
    return starts;
}

}  // namespace

WindowPlan plan_windows(int video_frames, int clip_frames, WindowDirection direction) {
    if (clip_frames < 1) throw ConfigError("clip length must be positive");
    WindowPlan plan;
    plan.clip_frames = clip_frames;
    plan.stride = std::max(1, static_cast<int>(std::lround(0.25 * clip_frames)));
    plan.direction = direction;

    if (video_frames <= clip_frames) {
        plan.starts = {0};  // short video: single zero-padded window
        return plan;
    }

    const std::vector<int> fwd = forward_starts(video_frames, clip_frames, plan.stride);
    std::vector<int> bwd(fwd.size());
    // Mirror construction from the video end.
    for (size_t i = 0; i < fwd.size(); ++i) {
        bwd[i] = video_frames - clip_frames - fwd[i];
    }

    switch (direction) {
        case WindowDirection::kForward:
            plan.starts = fwd;
            break;
        case WindowDirection::kBackward:
            plan.starts = bwd;
            break;
        case WindowDirection::kBidirectional: {
            std::set<int> seen(fwd.begin(), fwd.end());
            plan.starts = fwd;
            for (int s : bwd) {
                if (seen.insert(s).second) plan.starts.push_back(s);
            }
            break;
        }
    }
    return plan;
}

}  // namespace tadkit
