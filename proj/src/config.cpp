#include "tadkit/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "tadkit/errors.hpp"

namespace tadkit {

namespace {

// Tracks which keys of an object were consumed; leftovers are config errors.
class Cursor {
public:
    Cursor(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
        if (!j_->is_object()) throw ConfigError("expected object at " + ptr());
    }

    bool has(const char* key) const { return j_->contains(key); }

    template <typename V>
    void get(const char* key, V& out) {
        if (!j_->contains(key)) return;
        seen_.insert(key);
        try {
            out = (*j_)[key].template get<V>();
        } catch (const json::exception&) {
            throw ConfigError("bad value type at " + ptr() + "/" + key);
        }
    }

    void get_enum(const char* key, const std::vector<std::pair<std::string, int>>& table,
                  int& out) {
        std::string s;
        if (!j_->contains(key)) return;
        get(key, s);
        for (const auto& [name, v] : table) {
            if (name == s) { out = v; return; }
        }
        std::string options;
        for (const auto& [name, v] : table) options += (options.empty() ? "" : ", ") + name;
        throw ConfigError("bad value '" + s + "' at " + ptr() + "/" + key +
                          " (expected one of: " + options + ")");
    }

    Cursor child(const char* key) {
        seen_.insert(key);
        return Cursor((*j_)[key], path_ + "/" + key);
    }

    bool has_child(const char* key) const { return j_->contains(key) && (*j_)[key].is_object(); }

    void finish() const {
        for (auto it = j_->begin(); it != j_->end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ConfigError("unknown key at " + ptr() + "/" + it.key());
            }
        }
    }

    std::string ptr() const { return path_.empty() ? "" : path_; }

private:
    const json* j_;
    std::string path_;
    std::set<std::string> seen_;
};

const std::vector<std::pair<std::string, int>> kVariantTable = {
    {"tfpn_from_backbone", static_cast<int>(NeckVariant::kTfpnFromBackbone)},
    {"tdm_after_backbone", static_cast<int>(NeckVariant::kTdmAfterBackbone)},
    {"tdm_tfpn_after_backbone", static_cast<int>(NeckVariant::kTdmTfpnAfterBackbone)},
};
const std::vector<std::pair<std::string, int>> kOperatorTable = {
    {"conv", static_cast<int>(NeckOperator::kConv)},
    {"maxpool", static_cast<int>(NeckOperator::kMaxPool)},
};
const std::vector<std::pair<std::string, int>> kHeadTable = {
    {"ab", static_cast<int>(HeadKind::kAnchorBased)},
    {"af", static_cast<int>(HeadKind::kAnchorFree)},
};
const std::vector<std::pair<std::string, int>> kSuppressorTable = {
    {"nms", static_cast<int>(Suppressor::kNms)},
    {"nmw", static_cast<int>(Suppressor::kNmw)},
    {"auto", static_cast<int>(Suppressor::kAuto)},
};
const std::vector<std::pair<std::string, int>> kNormalizerTable = {
    {"num_positives", static_cast<int>(LossNormalizer::kNumPositives)},
    {"batch_mean", static_cast<int>(LossNormalizer::kBatchMean)},
};

}  // namespace

const char* to_string(NeckVariant v) {
    switch (v) {
        case NeckVariant::kTfpnFromBackbone: return "tfpn_from_backbone";
        case NeckVariant::kTdmAfterBackbone: return "tdm_after_backbone";
        case NeckVariant::kTdmTfpnAfterBackbone: return "tdm_tfpn_after_backbone";
    }
    return "?";
}
const char* to_string(NeckOperator o) {
    return o == NeckOperator::kConv ? "conv" : "maxpool";
}
const char* to_string(HeadKind k) { return k == HeadKind::kAnchorBased ? "ab" : "af"; }
const char* to_string(Suppressor s) {
    switch (s) {
        case Suppressor::kNms: return "nms";
        case Suppressor::kNmw: return "nmw";
        case Suppressor::kAuto: return "auto";
    }
    return "?";
}
const char* to_string(LossNormalizer n) {
    return n == LossNormalizer::kNumPositives ? "num_positives" : "batch_mean";
}

void BackboneConfig::validate() const {
    if (in_channels <= 0) throw ConfigError("backbone.in_channels must be positive");
    if (stage_channels.empty()) throw ConfigError("backbone.stage_channels is empty");
    for (int c : stage_channels) {
        if (c <= 0) throw ConfigError("backbone.stage_channels must be positive");
    }
    const size_t n = downsample_before_stage.size();
    if (temporal_preservation && n != 0) {
        throw ConfigError("temporal preservation keeps the full temporal length; "
                          "backbone.downsample_before_stage must be empty");
    }
    if (!temporal_preservation && n != 3) {
        throw ConfigError("without temporal preservation the backbone applies x8 temporal "
                          "downsampling (exactly 3 x2 stages)");
    }
    std::set<int> uniq;
    for (int s : downsample_before_stage) {
        if (s < 0 || s >= static_cast<int>(stage_channels.size())) {
            throw ConfigError("backbone.downsample_before_stage index out of range");
        }
        if (!uniq.insert(s).second) {
            throw ConfigError("backbone.downsample_before_stage has duplicates");
        }
    }
    if ((spatial_h > 0) != (spatial_w > 0)) {
        throw ConfigError("backbone spatial dims must be set together");
    }
}

void NeckConfig::validate() const {
    if (levels < 2) throw ConfigError("neck.levels must be at least 2");
    if (channels <= 0) throw ConfigError("neck.channels must be positive");
    if (tdm_channels <= 0) throw ConfigError("neck.tdm_channels must be positive");
}

void HeadConfig::validate(int levels) const {
    if (tower_depth < 1) throw ConfigError("head.tower_depth must be positive");
    if (tower_kernel < 1 || tower_kernel % 2 == 0) {
        throw ConfigError("head.tower_kernel must be odd and positive");
    }
    if (channels <= 0) throw ConfigError("head.channels must be positive");
    if (num_classes <= 0) throw ConfigError("head.num_classes must be positive");
    if (anchors_per_location < 1) throw ConfigError("head.anchors_per_location must be positive");
    if (!(anchor_base > 0)) throw ConfigError("head.anchor_base must be positive");
    if (!(assign_lo <= assign_hi)) throw ConfigError("head.assign_lo must not exceed assign_hi");
    if (static_cast<int>(af_range_borders.size()) != levels) {
        throw ConfigError("head.af_range_borders needs one entry per pyramid level (" +
                          std::to_string(levels) + ")");
    }
    for (size_t i = 1; i < af_range_borders.size(); ++i) {
        if (!(af_range_borders[i] > af_range_borders[i - 1])) {
            throw ConfigError("head.af_range_borders must be strictly increasing");
        }
    }
}

void LossConfig::validate() const {
    if (!(alpha_weight > 0)) throw ConfigError("loss.alpha_weight must be positive");
    if (!(focal_gamma >= 0)) throw ConfigError("loss.focal_gamma must be non-negative");
    if (!(focal_alpha > 0 && focal_alpha < 1)) throw ConfigError("loss.focal_alpha must be in (0,1)");
}

void OptimConfig::validate() const {
    if (!(warmup_start < lr_peak)) throw ConfigError("optim.warmup_start must be below lr_peak");
    if (!(lr_floor < lr_peak)) throw ConfigError("optim.lr_floor must be below lr_peak");
    if (warmup_iters < 0 || cosine_period <= 0) throw ConfigError("optim schedule lengths invalid");
    if (batch_size < 1 || iterations < 1) throw ConfigError("optim.batch_size/iterations invalid");
    if (!(gt_keep_fraction > 0 && gt_keep_fraction <= 1)) {
        throw ConfigError("optim.gt_keep_fraction must be in (0,1]");
    }
}

void PostConfig::validate() const {
    if (!(score_floor >= 0 && score_floor < 1)) throw ConfigError("post.score_floor out of range");
    if (!(nms_tiou > 0 && nms_tiou <= 1)) throw ConfigError("post.nms_tiou out of range");
    if (max_detections < 1) throw ConfigError("post.max_detections must be positive");
}

void EvalConfig::validate() const {
    if (tiou_thresholds.empty()) throw ConfigError("eval.tiou_thresholds is empty");
    double prev = 0.0;
    for (double t : tiou_thresholds) {
        if (!(t > prev && t <= 1.0)) {
            throw ConfigError("eval.tiou_thresholds must be strictly increasing in (0,1]");
        }
        prev = t;
    }
}

void SynthSpec::validate() const {
    if (n_train_videos < 0 || n_test_videos < 0 || n_train_videos + n_test_videos == 0) {
        throw ConfigError("data: video counts invalid");
    }
    if (n_classes < 1) throw ConfigError("data.n_classes must be positive");
    if (!(fps > 0)) throw ConfigError("data.fps must be positive");
    if (!(duration_min > 0 && duration_max >= duration_min)) {
        throw ConfigError("data duration range invalid");
    }
    if (instances_min < 0 || instances_max < instances_min) {
        throw ConfigError("data instance count range invalid");
    }
    if (!(length_min > 0 && length_max >= length_min)) {
        throw ConfigError("data action length range invalid");
    }
    if (channels < 1) throw ConfigError("data.channels must be positive");
    if (!(noise_sigma >= 0) || !(signature_strength >= 0)) {
        throw ConfigError("data noise/strength must be non-negative");
    }
    if (!(ramp_seconds >= 0)) throw ConfigError("data.ramp_seconds must be non-negative");
}

void RunConfig::finalize() {
    if (backbone.in_channels == 0) backbone.in_channels = data.channels;
    if (head.num_classes == 0) head.num_classes = data.n_classes;
    if (neck.channels == 0) {
        neck.channels = neck.op == NeckOperator::kMaxPool && backbone.stage_channels.size()
                            ? backbone.stage_channels.back()
                            : 32;
    }
    if (neck.tdm_channels == 0) neck.tdm_channels = 2 * neck.channels;
    if (head.channels == 0) head.channels = neck.channels;

    data.validate();
    backbone.validate();
    neck.validate();
    head.validate(neck.levels);
    loss.validate();
    optim.validate();
    post.validate();
    eval.validate();

    if (backbone.in_channels != data.channels) {
        throw ConfigError("backbone.in_channels must match data.channels");
    }
    if (neck.op == NeckOperator::kMaxPool &&
        neck.variant != NeckVariant::kTfpnFromBackbone &&
        neck.channels != backbone.stage_channels.back()) {
        throw ConfigError("maxpool neck keeps the backbone width: neck.channels must equal "
                          "the last backbone stage width");
    }
    if (clip_frames < 1) throw ConfigError("clip_frames must be positive");
    const int factor = backbone.temporal_factor();
    if (clip_frames % factor != 0) {
        throw ConfigError("clip_frames must be divisible by the backbone temporal factor " +
                          std::to_string(factor));
    }
}

RunConfig default_run_config(HeadKind kind) {
    RunConfig cfg;
    cfg.head.kind = kind;
    if (kind == HeadKind::kAnchorBased) {
        cfg.neck.variant = NeckVariant::kTdmTfpnAfterBackbone;
        cfg.neck.op = NeckOperator::kConv;
        cfg.neck.channels = 32;
        cfg.neck.tdm_channels = 64;
    } else {
        cfg.neck.variant = NeckVariant::kTdmAfterBackbone;
        cfg.neck.op = NeckOperator::kMaxPool;
    }
    cfg.finalize();
    return cfg;
}

RunConfig run_config_from_json(const json& j) {
    Cursor root(j, "");

    // The head family decides the neck defaults, so peek at it first.
    HeadKind kind = HeadKind::kAnchorFree;
    if (j.contains("head") && j["head"].is_object() && j["head"].contains("kind")) {
        Cursor peek(j["head"], "/head");
        int k = static_cast<int>(kind);
        peek.get_enum("kind", kHeadTable, k);
        kind = static_cast<HeadKind>(k);
    }
    RunConfig cfg;
    cfg.head.kind = kind;
    if (kind == HeadKind::kAnchorBased) {
        cfg.neck.variant = NeckVariant::kTdmTfpnAfterBackbone;
        cfg.neck.op = NeckOperator::kConv;
        cfg.neck.channels = 32;
        cfg.neck.tdm_channels = 64;
    }

    root.get("seed", cfg.seed);
    {
        std::string prec = precision_name(cfg.precision);
        root.get("precision", prec);
        cfg.precision = precision_from_name(prec);
    }
    root.get("clip_frames", cfg.clip_frames);

    if (root.has("data")) {
        Cursor c = root.child("data");
        c.get("seed", cfg.data.seed);
        c.get("n_train_videos", cfg.data.n_train_videos);
        c.get("n_test_videos", cfg.data.n_test_videos);
        c.get("n_classes", cfg.data.n_classes);
        c.get("fps", cfg.data.fps);
        c.get("duration_min", cfg.data.duration_min);
        c.get("duration_max", cfg.data.duration_max);
        c.get("instances_min", cfg.data.instances_min);
        c.get("instances_max", cfg.data.instances_max);
        c.get("length_min", cfg.data.length_min);
        c.get("length_max", cfg.data.length_max);
        c.get("channels", cfg.data.channels);
        c.get("noise_sigma", cfg.data.noise_sigma);
        c.get("signature_strength", cfg.data.signature_strength);
        c.get("ramp_seconds", cfg.data.ramp_seconds);
        c.get("view_noise_sigma", cfg.data.view_noise_sigma);
        c.finish();
    }
    if (root.has("backbone")) {
        Cursor c = root.child("backbone");
        c.get("in_channels", cfg.backbone.in_channels);
        c.get("stage_channels", cfg.backbone.stage_channels);
        c.get("temporal_preservation", cfg.backbone.temporal_preservation);
        if (c.has("downsample_before_stage")) {
            c.get("downsample_before_stage", cfg.backbone.downsample_before_stage);
            // Listing downsample stages implies the non-preserving backbone
            // unless the flag was given explicitly.
            if (!j["backbone"].contains("temporal_preservation")) {
                cfg.backbone.temporal_preservation = cfg.backbone.downsample_before_stage.empty();
            }
        } else if (!cfg.backbone.temporal_preservation) {
            cfg.backbone.downsample_before_stage = {0, 1, 3};
        }
        c.get("spatial_h", cfg.backbone.spatial_h);
        c.get("spatial_w", cfg.backbone.spatial_w);
        c.finish();
    }
    if (root.has("neck")) {
        Cursor c = root.child("neck");
        int v = static_cast<int>(cfg.neck.variant), o = static_cast<int>(cfg.neck.op);
        c.get_enum("variant", kVariantTable, v);
        c.get_enum("operator", kOperatorTable, o);
        cfg.neck.variant = static_cast<NeckVariant>(v);
        cfg.neck.op = static_cast<NeckOperator>(o);
        c.get("levels", cfg.neck.levels);
        c.get("channels", cfg.neck.channels);
        c.get("tdm_channels", cfg.neck.tdm_channels);
        c.get("spatial_preservation", cfg.neck.spatial_preservation);
        c.finish();
    }
    if (root.has("head")) {
        Cursor c = root.child("head");
        int k = static_cast<int>(cfg.head.kind);
        c.get_enum("kind", kHeadTable, k);
        cfg.head.kind = static_cast<HeadKind>(k);
        c.get("tower_depth", cfg.head.tower_depth);
        c.get("tower_kernel", cfg.head.tower_kernel);
        c.get("channels", cfg.head.channels);
        c.get("num_classes", cfg.head.num_classes);
        c.get("anchors_per_location", cfg.head.anchors_per_location);
        c.get("anchor_base", cfg.head.anchor_base);
        c.get("assign_hi", cfg.head.assign_hi);
        c.get("assign_lo", cfg.head.assign_lo);
        c.get("force_best_match", cfg.head.force_best_match);
        c.get("af_range_borders", cfg.head.af_range_borders);
        c.finish();
    }
    if (root.has("loss")) {
        Cursor c = root.child("loss");
        c.get("alpha_weight", cfg.loss.alpha_weight);
        c.get("focal_gamma", cfg.loss.focal_gamma);
        c.get("focal_alpha", cfg.loss.focal_alpha);
        int n = static_cast<int>(cfg.loss.normalizer);
        c.get_enum("normalizer", kNormalizerTable, n);
        cfg.loss.normalizer = static_cast<LossNormalizer>(n);
        c.finish();
    }
    if (root.has("optim")) {
        Cursor c = root.child("optim");
        c.get("lr_peak", cfg.optim.lr_peak);
        c.get("lr_floor", cfg.optim.lr_floor);
        c.get("warmup_iters", cfg.optim.warmup_iters);
        c.get("warmup_start", cfg.optim.warmup_start);
        c.get("cosine_period", cfg.optim.cosine_period);
        c.get("cosine_restarts", cfg.optim.cosine_restarts);
        c.get("momentum", cfg.optim.momentum);
        c.get("weight_decay", cfg.optim.weight_decay);
        c.get("batch_size", cfg.optim.batch_size);
        c.get("iterations", cfg.optim.iterations);
        c.get("checkpoint_every", cfg.optim.checkpoint_every);
        c.get("gt_keep_fraction", cfg.optim.gt_keep_fraction);
        c.finish();
    }
    if (root.has("post")) {
        Cursor c = root.child("post");
        c.get("score_floor", cfg.post.score_floor);
        c.get("nms_tiou", cfg.post.nms_tiou);
        int s = static_cast<int>(cfg.post.suppressor);
        c.get_enum("suppressor", kSuppressorTable, s);
        cfg.post.suppressor = static_cast<Suppressor>(s);
        c.get("max_detections", cfg.post.max_detections);
        c.finish();
    }
    if (root.has("eval")) {
        Cursor c = root.child("eval");
        c.get("tiou_thresholds", cfg.eval.tiou_thresholds);
        c.finish();
    }
    root.finish();

    cfg.finalize();
    return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["precision"] = precision_name(cfg.precision);
    j["clip_frames"] = cfg.clip_frames;
    j["data"] = {
        {"seed", cfg.data.seed},
        {"n_train_videos", cfg.data.n_train_videos},
        {"n_test_videos", cfg.data.n_test_videos},
        {"n_classes", cfg.data.n_classes},
        {"fps", cfg.data.fps},
        {"duration_min", cfg.data.duration_min},
        {"duration_max", cfg.data.duration_max},
        {"instances_min", cfg.data.instances_min},
        {"instances_max", cfg.data.instances_max},
        {"length_min", cfg.data.length_min},
        {"length_max", cfg.data.length_max},
        {"channels", cfg.data.channels},
        {"noise_sigma", cfg.data.noise_sigma},
        {"signature_strength", cfg.data.signature_strength},
        {"ramp_seconds", cfg.data.ramp_seconds},
        {"view_noise_sigma", cfg.data.view_noise_sigma},
    };
    j["backbone"] = {
        {"in_channels", cfg.backbone.in_channels},
        {"stage_channels", cfg.backbone.stage_channels},
        {"downsample_before_stage", cfg.backbone.downsample_before_stage},
        {"temporal_preservation", cfg.backbone.temporal_preservation},
        {"spatial_h", cfg.backbone.spatial_h},
        {"spatial_w", cfg.backbone.spatial_w},
    };
    j["neck"] = {
        {"variant", to_string(cfg.neck.variant)},
        {"operator", to_string(cfg.neck.op)},
        {"levels", cfg.neck.levels},
        {"channels", cfg.neck.channels},
        {"tdm_channels", cfg.neck.tdm_channels},
        {"spatial_preservation", cfg.neck.spatial_preservation},
    };
    j["head"] = {
        {"kind", to_string(cfg.head.kind)},
        {"tower_depth", cfg.head.tower_depth},
        {"tower_kernel", cfg.head.tower_kernel},
        {"channels", cfg.head.channels},
        {"num_classes", cfg.head.num_classes},
        {"anchors_per_location", cfg.head.anchors_per_location},
        {"anchor_base", cfg.head.anchor_base},
        {"assign_hi", cfg.head.assign_hi},
        {"assign_lo", cfg.head.assign_lo},
        {"force_best_match", cfg.head.force_best_match},
        {"af_range_borders", cfg.head.af_range_borders},
    };
    j["loss"] = {
        {"alpha_weight", cfg.loss.alpha_weight},
        {"focal_gamma", cfg.loss.focal_gamma},
        {"focal_alpha", cfg.loss.focal_alpha},
        {"normalizer", to_string(cfg.loss.normalizer)},
    };
    j["optim"] = {
        {"lr_peak", cfg.optim.lr_peak},
        {"lr_floor", cfg.optim.lr_floor},
        {"warmup_iters", cfg.optim.warmup_iters},
        {"warmup_start", cfg.optim.warmup_start},
        {"cosine_period", cfg.optim.cosine_period},
        {"cosine_restarts", cfg.optim.cosine_restarts},
        {"momentum", cfg.optim.momentum},
        {"weight_decay", cfg.optim.weight_decay},
        {"batch_size", cfg.optim.batch_size},
        {"iterations", cfg.optim.iterations},
        {"checkpoint_every", cfg.optim.checkpoint_every},
        {"gt_keep_fraction", cfg.optim.gt_keep_fraction},
    };
    j["post"] = {
        {"score_floor", cfg.post.score_floor},
        {"nms_tiou", cfg.post.nms_tiou},
        {"suppressor", to_string(cfg.post.suppressor)},
        {"max_detections", cfg.post.max_detections},
    };
    j["eval"] = {{"tiou_thresholds", cfg.eval.tiou_thresholds}};
    return j;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return run_config_from_json(j);
}

}  // namespace tadkit
