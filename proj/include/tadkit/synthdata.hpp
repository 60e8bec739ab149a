#ifndef TADKIT_SYNTHDATA_HPP
#define TADKIT_SYNTHDATA_HPP

#include <string>
#include <vector>

#include "tadkit/config.hpp"
#include "tadkit/types.hpp"

namespace tadkit {

// In-memory dataset: annotations and per-video feature tensors (channels x
// frames), aligned by index.
struct Dataset {
    double fps = 0.0;
    int channels = 0;
    int n_classes = 0;
    std::vector<VideoAnnotation> annotations;
    std::vector<DenseArray> features;
};

// Per-class unit signature vectors over the channel axis.
std::vector<std::vector<double>> class_signatures(const SynthSpec& spec);

// Deterministic synthetic videos: i.i.d. Gaussian background plus a ramped
// class signature inside every planted instance. Split is "train" or "test".
Dataset generate_dataset(const SynthSpec& spec, const std::string& split);

// Test-time view transforms (stand-ins for crop / flip on real pixels).
DenseArray crop_view(const DenseArray& features, const std::string& video_id, int view_index,
                     double sigma, uint64_t seed);
DenseArray flip_view(const DenseArray& features);

// Annotation file schema:
// {"version":1,"fps":F,"videos":[{"id","duration","instances":[{"start","end","class"}]}]}
void write_annotations(const std::string& path, double fps,
                       const std::vector<VideoAnnotation>& annotations);
std::vector<VideoAnnotation> read_annotations(const std::string& path, double* fps_out,
                                              int num_classes_hint = 0);

// Feature files: text header (id, channels, frames, fps, precision) followed
// by little-endian raw samples.
void write_features(const std::string& path, const std::string& video_id, double fps,
                    const DenseArray& features);
DenseArray read_features(const std::string& path, std::string* video_id_out, double* fps_out);

// On-disk dataset: manifest.json, ann_<split>.json, features/<id>.feat.
void write_dataset(const std::string& dir, const SynthSpec& spec);
Dataset load_dataset(const std::string& dir, const std::string& split);

}  // namespace tadkit

#endif
