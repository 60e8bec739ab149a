#ifndef TADKIT_DETECTIONS_IO_HPP
#define TADKIT_DETECTIONS_IO_HPP

#include <string>

#include "tadkit/evaluation.hpp"

namespace tadkit {

// Detection results file: {"video_id": [{"start","end","class","score"}]},
// seconds printed with 9 decimal digits in a fixed order so identical runs
// produce identical bytes.
void write_detections(const std::string& path, const DetectionMap& dets);
DetectionMap read_detections(const std::string& path);

}  // namespace tadkit

#endif
