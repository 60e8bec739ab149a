#ifndef TADKIT_WINDOWS_HPP
#define TADKIT_WINDOWS_HPP

#include <vector>

#include "tadkit/config.hpp"

namespace tadkit {

// Sliding-window coverage of a video; stride is 25% of the clip length.
struct WindowPlan {
    int clip_frames = 0;
    int stride = 0;
    std::vector<int> starts;  // frame offsets, deduplicated
    WindowDirection direction = WindowDirection::kForward;
};

WindowPlan plan_windows(int video_frames, int clip_frames, WindowDirection direction);

}  // namespace tadkit

#endif
