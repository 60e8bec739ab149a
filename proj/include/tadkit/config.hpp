#ifndef TADKIT_CONFIG_HPP
#define TADKIT_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tadkit/types.hpp"

namespace tadkit {

using json = nlohmann::ordered_json;

enum class NeckVariant { kTfpnFromBackbone, kTdmAfterBackbone, kTdmTfpnAfterBackbone };
enum class NeckOperator { kConv, kMaxPool };
enum class HeadKind { kAnchorBased, kAnchorFree };
enum class Suppressor { kNms, kNmw, kAuto };
enum class LossNormalizer { kNumPositives, kBatchMean };
enum class WindowDirection { kForward, kBackward, kBidirectional };
enum class FusionStage { kBackbone, kNeck, kHead, kPost };

struct BackboneConfig {
    int in_channels = 0;  // 0: follow data channels
    std::vector<int> stage_channels = {64, 64, 64, 64};
    std::vector<int> downsample_before_stage;  // x2 temporal before each listed stage
    bool temporal_preservation = true;
    int spatial_h = 0, spatial_w = 0;  // 0: features carry no spatial extent

    int temporal_factor() const { return 1 << downsample_before_stage.size(); }
    int spatial_cols() const { return (spatial_h > 0 ? spatial_h : 1) * (spatial_w > 0 ? spatial_w : 1); }
    void validate() const;
};

struct NeckConfig {
    NeckVariant variant = NeckVariant::kTdmAfterBackbone;
    NeckOperator op = NeckOperator::kMaxPool;
    int levels = 5;
    int channels = 0;      // pyramid width facing the head; 0: derive
    int tdm_channels = 0;  // strided-conv chain width; 0: 2x channels
    bool spatial_preservation = false;

    void validate() const;
};

struct HeadConfig {
    HeadKind kind = HeadKind::kAnchorFree;
    int tower_depth = 4;
    int tower_kernel = 3;
    int channels = 0;  // 0: follow neck channels
    int num_classes = 0;  // 0: follow data classes
    // Anchor-based assignment.
    int anchors_per_location = 5;  // scales 2^(k/5)
    double anchor_base = 2.0;
    double assign_hi = 0.6;
    double assign_lo = 0.4;
    bool force_best_match = true;
    // Anchor-free regression-range borders, one per level boundary; the
    // range of level i is (borders[i], borders[i+1]] with an implicit
    // +infinity after the last entry. Units: first-level feature steps.
    std::vector<double> af_range_borders = {-1, 5, 10, 20, 40};

    void validate(int levels) const;
};

struct LossConfig {
    double alpha_weight = 1.0;
    double focal_gamma = 2.0;
    double focal_alpha = 0.25;
    LossNormalizer normalizer = LossNormalizer::kNumPositives;

    void validate() const;
};

struct OptimConfig {
    double lr_peak = 0.01;
    double lr_floor = 0.0001;
    int warmup_iters = 500;
    double warmup_start = 0.001;
    int cosine_period = 1200;
    bool cosine_restarts = false;
    double momentum = 0.9;
    double weight_decay = 0.0001;
    int batch_size = 16;
    int iterations = 2000;
    int checkpoint_every = 1000;
    double gt_keep_fraction = 0.75;  // drop clipped gts covering less of the original

    void validate() const;
};

struct PostConfig {
    double score_floor = 0.005;
    double nms_tiou = 0.5;
    Suppressor suppressor = Suppressor::kAuto;  // AB -> NMW, AF -> NMS
    int max_detections = 200;

    Suppressor resolve(HeadKind kind) const {
        if (suppressor != Suppressor::kAuto) return suppressor;
        return kind == HeadKind::kAnchorBased ? Suppressor::kNmw : Suppressor::kNms;
    }
    void validate() const;
};

struct EvalConfig {
    std::vector<double> tiou_thresholds = {0.3, 0.4, 0.5, 0.6, 0.7};

    void validate() const;
};

struct SynthSpec {
    uint64_t seed = 7;
    int n_train_videos = 200;
    int n_test_videos = 50;
    int n_classes = 5;
    double fps = 4.0;
    double duration_min = 40.0, duration_max = 80.0;
    int instances_min = 2, instances_max = 5;
    double length_min = 1.5, length_max = 12.0;  // log-uniform action length, seconds
    int channels = 64;
    double noise_sigma = 1.0;
    double signature_strength = 2.0;
    double ramp_seconds = 0.5;
    double view_noise_sigma = 0.1;

    void validate() const;
};

// Complete experiment snapshot; embedded in every checkpoint.
struct RunConfig {
    uint64_t seed = 7;
    Precision precision = Precision::f32;
    int clip_frames = 96;
    SynthSpec data;
    BackboneConfig backbone;
    NeckConfig neck;
    HeadConfig head;
    LossConfig loss;
    OptimConfig optim;
    PostConfig post;
    EvalConfig eval;

    void finalize();  // resolve derived defaults, then validate everything
};

// Defaults for one head family (paper defaults: AB = TDM-TFPN + conv,
// AF = TDM + maxpool).
RunConfig default_run_config(HeadKind kind);

// Strict parse: unknown keys anywhere are a ConfigError naming the JSON
// pointer. Missing keys fall back to defaults.
RunConfig run_config_from_json(const json& j);
json run_config_to_json(const RunConfig& cfg);

RunConfig load_run_config(const std::string& path);

const char* to_string(NeckVariant v);
const char* to_string(NeckOperator o);
const char* to_string(HeadKind k);
const char* to_string(Suppressor s);
const char* to_string(LossNormalizer n);

}  // namespace tadkit

#endif
