#include "tadkit/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tadkit/errors.hpp"
#include "tadkit/prng.hpp"

namespace tadkit {

namespace fs = std::filesystem;

namespace {

constexpr uint64_t kTagSignatures = 0x73696773;  // per-class channel patterns
constexpr uint64_t kTagVideo = 0x76696465;       // per-video substreams
constexpr uint64_t kTagView = 0x76696577;        // TTA noise views

uint64_t hash_string(const std::string& s) {
    uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

struct PlannedVideo {
    std::string id;
    int frames = 0;
    std::vector<ActionInstance> instances;
};

PlannedVideo plan_video(const SynthSpec& spec, const std::string& id, uint64_t ordinal) {
    Prng rng(mix_seed(spec.seed, mix_seed(kTagVideo, ordinal)));
    PlannedVideo v;
    v.id = id;
    const int fmin = static_cast<int>(std::lround(spec.duration_min * spec.fps));
    const int fmax = static_cast<int>(std::lround(spec.duration_max * spec.fps));
    v.frames = static_cast<int>(rng.uniform_int(fmin, fmax));
    const double duration = v.frames / spec.fps;

    const int want = static_cast<int>(rng.uniform_int(spec.instances_min, spec.instances_max));
    for (int k = 0; k < want; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            const double len =
                std::min(rng.log_uniform(spec.length_min, spec.length_max), duration);
            const double start = rng.uniform(0.0, duration - len);
            const Interval cand(start, start + len);
            bool overlaps = false;
            for (const auto& inst : v.instances) {
                if (overlap_length(cand, inst.interval) > 0.0) { overlaps = true; break; }
            }
            if (overlaps) continue;
            const int cls = static_cast<int>(rng.next_below(spec.n_classes));
            v.instances.emplace_back(cand, cls);
            placed = true;
        }
        if (!placed) {
            throw ConfigError("synthetic spec too dense: failed to place instance " +
                              std::to_string(k) + " in video " + id +
                              " after 1000 attempts");
        }
    }
    std::sort(v.instances.begin(), v.instances.end(),
              [](const ActionInstance& a, const ActionInstance& b) {
                  return a.interval.start < b.interval.start;
              });
    return v;
}

}  // namespace

std::vector<std::vector<double>> class_signatures(const SynthSpec& spec) {
    Prng rng(mix_seed(spec.seed, kTagSignatures));
    std::vector<std::vector<double>> sigs(spec.n_classes, std::vector<double>(spec.channels));
    for (auto& s : sigs) {
        double norm = 0.0;
        for (auto& v : s) { v = rng.gaussian(); norm += v * v; }
        norm = std::sqrt(norm);
        for (auto& v : s) v /= norm;
    }
    if (spec.channels >= 8 * spec.n_classes) {
        for (size_t a = 0; a < sigs.size(); ++a) {
            for (size_t b = a + 1; b < sigs.size(); ++b) {
                double dot = 0.0;
                for (int c = 0; c < spec.channels; ++c) dot += sigs[a][c] * sigs[b][c];
                if (std::abs(dot) >= 0.5) {
                    throw NumericError("class signatures insufficiently orthogonal (|cos| = " +
                                       std::to_string(std::abs(dot)) + ")");
                }
            }
        }
    }
    return sigs;
}

Dataset generate_dataset(const SynthSpec& spec, const std::string& split) {
    spec.validate();
    const bool train = split == "train";
    if (!train && split != "test") throw ConfigError("unknown split '" + split + "'");
    const int count = train ? spec.n_train_videos : spec.n_test_videos;
    const uint64_t base = train ? 0 : static_cast<uint64_t>(spec.n_train_videos);

    const auto sigs = class_signatures(spec);

    Dataset ds;
    ds.fps = spec.fps;
    ds.channels = spec.channels;
    ds.n_classes = spec.n_classes;
    for (int i = 0; i < count; ++i) {
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "%s_%04d", split.c_str(), i);
        const uint64_t ordinal = base + static_cast<uint64_t>(i);
        PlannedVideo plan = plan_video(spec, idbuf, ordinal);

        VideoAnnotation ann;
        ann.video_id = plan.id;
        ann.duration = plan.frames / spec.fps;
        ann.fps = spec.fps;
        ann.instances = plan.instances;
        ann.validate(spec.n_classes);

        DenseArray feat({static_cast<size_t>(spec.channels), static_cast<size_t>(plan.frames)},
                        Precision::f32);
        Prng noise(mix_seed(spec.seed, mix_seed(kTagVideo ^ 0xff, ordinal)));
        for (auto& v : feat.data) v = noise.gaussian() * spec.noise_sigma;
        for (const auto& inst : plan.instances) {
            const auto& sig = sigs[inst.class_id];
            for (int f = 0; f < plan.frames; ++f) {
                const double t = (f + 0.5) / spec.fps;
                if (t <= inst.interval.start || t >= inst.interval.end) continue;
                double ramp = 1.0;
                if (spec.ramp_seconds > 0.0) {
                    ramp = std::min(1.0, std::min((t - inst.interval.start) / spec.ramp_seconds,
                                                  (inst.interval.end - t) / spec.ramp_seconds));
                }
                const double gain = spec.signature_strength * ramp;
                for (int c = 0; c < spec.channels; ++c) {
                    feat.data[static_cast<size_t>(c) * plan.frames + f] += gain * sig[c];
                }
            }
        }
        // Features are shipped in 32-bit; quantize now so the in-memory and
        // on-disk pipelines see identical values.
        for (auto& v : feat.data) v = static_cast<double>(static_cast<float>(v));

        ds.annotations.push_back(std::move(ann));
        ds.features.push_back(std::move(feat));
    }
    return ds;
}

DenseArray crop_view(const DenseArray& features, const std::string& video_id, int view_index,
                     double sigma, uint64_t seed) {
    DenseArray out = features;
    if (view_index == 0 || sigma == 0.0) return out;
    Prng rng(mix_seed(seed, mix_seed(kTagView, hash_string(video_id) + view_index)));
    for (auto& v : out.data) {
        v = static_cast<double>(static_cast<float>(v + sigma * rng.gaussian()));
    }
    return out;
}

DenseArray flip_view(const DenseArray& features) {
    if (features.shape.size() != 2) throw DataError("flip view expects (channels, frames)");
    const size_t c = features.shape[0], t = features.shape[1];
    DenseArray out = features;
    for (size_t ch = 0; ch + 1 < c; ch += 2) {
        for (size_t f = 0; f < t; ++f) {
            std::swap(out.data[ch * t + f], out.data[(ch + 1) * t + f]);
        }
    }
    return out;
}

void write_annotations(const std::string& path, double fps,
                       const std::vector<VideoAnnotation>& annotations) {
    json j;
    j["version"] = 1;
    j["fps"] = fps;
    json videos = json::array();
    for (const auto& ann : annotations) {
        json instances = json::array();
        for (const auto& inst : ann.instances) {
            instances.push_back({{"start", inst.interval.start},
                                 {"end", inst.interval.end},
                                 {"class", inst.class_id}});
        }
        videos.push_back(
            {{"id", ann.video_id}, {"duration", ann.duration}, {"instances", instances}});
    }
    j["videos"] = videos;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write annotations to " + path);
    out << j.dump(2) << "\n";
}

namespace {

[[noreturn]] void schema_error(const std::string& ptr, const std::string& what) {
    throw DataError("annotation schema violation at " + ptr + ": " + what);
}

void require_keys(const json& j, const std::string& ptr,
                  const std::vector<std::string>& keys) {
    if (!j.is_object()) schema_error(ptr, "expected object");
    for (const auto& k : keys) {
        if (!j.contains(k)) schema_error(ptr + "/" + k, "missing");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) {
            schema_error(ptr + "/" + it.key(), "unknown key");
        }
    }
}

}  // namespace

std::vector<VideoAnnotation> read_annotations(const std::string& path, double* fps_out,
                                              int num_classes_hint) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open annotations: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("annotation parse error in " + path + ": " + e.what());
    }
    require_keys(j, "", {"version", "fps", "videos"});
    if (!j["version"].is_number_integer() || j["version"].get<int>() != 1) {
        schema_error("/version", "expected 1");
    }
    if (!j["fps"].is_number()) schema_error("/fps", "expected number");
    const double fps = j["fps"].get<double>();
    if (fps_out) *fps_out = fps;
    if (!j["videos"].is_array()) schema_error("/videos", "expected array");

    std::vector<VideoAnnotation> out;
    for (size_t v = 0; v < j["videos"].size(); ++v) {
        const std::string vptr = "/videos/" + std::to_string(v);
        const json& jv = j["videos"][v];
        require_keys(jv, vptr, {"id", "duration", "instances"});
        if (!jv["id"].is_string()) schema_error(vptr + "/id", "expected string");
        if (!jv["duration"].is_number()) schema_error(vptr + "/duration", "expected number");
        VideoAnnotation ann;
        ann.video_id = jv["id"].get<std::string>();
        ann.duration = jv["duration"].get<double>();
        ann.fps = fps;
        if (!jv["instances"].is_array()) schema_error(vptr + "/instances", "expected array");
        for (size_t k = 0; k < jv["instances"].size(); ++k) {
            const std::string iptr = vptr + "/instances/" + std::to_string(k);
            const json& ji = jv["instances"][k];
            require_keys(ji, iptr, {"start", "end", "class"});
            for (const char* f : {"start", "end"}) {
                if (!ji[f].is_number()) schema_error(iptr + "/" + f, "expected number");
            }
            if (!ji["class"].is_number_integer()) schema_error(iptr + "/class", "expected integer");
            const double s = ji["start"].get<double>(), e = ji["end"].get<double>();
            if (!(e > s)) schema_error(iptr + "/end", "must exceed start");
            ann.instances.emplace_back(Interval(s, e), ji["class"].get<int>());
        }
        try {
            ann.validate(num_classes_hint);
        } catch (const DataError& e) {
            schema_error(vptr, e.what());
        }
        out.push_back(std::move(ann));
    }
    return out;
}

void write_features(const std::string& path, const std::string& video_id, double fps,
                    const DenseArray& features) {
    if (features.shape.size() != 2) throw DataError("feature tensor must be (channels, frames)");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write features to " + path);
    out << "TADFEAT 1\n"
        << "id " << video_id << "\n"
        << "channels " << features.shape[0] << "\n"
        << "frames " << features.shape[1] << "\n"
        << "fps " << fps << "\n"
        << "precision " << precision_name(features.precision) << "\n\n";
    if (features.precision == Precision::f32) {
        std::vector<float> buf(features.data.begin(), features.data.end());
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    } else {
        out.write(reinterpret_cast<const char*>(features.data.data()),
                  static_cast<std::streamsize>(features.data.size() * sizeof(double)));
    }
}

DenseArray read_features(const std::string& path, std::string* video_id_out, double* fps_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open features: " + path);
    std::string line;
    std::getline(in, line);
    if (line != "TADFEAT 1") throw DataError("bad feature file magic in " + path);
    size_t channels = 0, frames = 0;
    double fps = 0.0;
    std::string id, precision = "f32";
    while (std::getline(in, line) && !line.empty()) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "id") ls >> id;
        else if (key == "channels") ls >> channels;
        else if (key == "frames") ls >> frames;
        else if (key == "fps") ls >> fps;
        else if (key == "precision") ls >> precision;
        else throw DataError("unknown feature header field '" + key + "' in " + path);
    }
    if (channels == 0 || frames == 0) throw DataError("incomplete feature header in " + path);
    DenseArray out({channels, frames}, precision_from_name(precision));
    if (out.precision == Precision::f32) {
        std::vector<float> buf(out.element_count());
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!in) throw DataError("truncated feature payload in " + path);
        out.data.assign(buf.begin(), buf.end());
    } else {
        in.read(reinterpret_cast<char*>(out.data.data()),
                static_cast<std::streamsize>(out.data.size() * sizeof(double)));
        if (!in) throw DataError("truncated feature payload in " + path);
    }
    if (video_id_out) *video_id_out = id;
    if (fps_out) *fps_out = fps;
    return out;
}

void write_dataset(const std::string& dir, const SynthSpec& spec) {
    fs::create_directories(fs::path(dir) / "features");
    json manifest;
    manifest["version"] = 1;
    manifest["prng"] = "splitmix64+boxmuller";
    manifest["spec"] = {
        {"seed", spec.seed},
        {"n_train_videos", spec.n_train_videos},
        {"n_test_videos", spec.n_test_videos},
        {"n_classes", spec.n_classes},
        {"fps", spec.fps},
        {"duration_min", spec.duration_min},
        {"duration_max", spec.duration_max},
        {"instances_min", spec.instances_min},
        {"instances_max", spec.instances_max},
        {"length_min", spec.length_min},
        {"length_max", spec.length_max},
        {"channels", spec.channels},
        {"noise_sigma", spec.noise_sigma},
        {"signature_strength", spec.signature_strength},
        {"ramp_seconds", spec.ramp_seconds},
        {"view_noise_sigma", spec.view_noise_sigma},
    };
    for (const std::string split : {"train", "test"}) {
        Dataset ds = generate_dataset(spec, split);
        write_annotations((fs::path(dir) / ("ann_" + split + ".json")).string(), spec.fps,
                          ds.annotations);
        json ids = json::array();
        for (size_t i = 0; i < ds.annotations.size(); ++i) {
            const auto& ann = ds.annotations[i];
            write_features((fs::path(dir) / "features" / (ann.video_id + ".feat")).string(),
                           ann.video_id, spec.fps, ds.features[i]);
            ids.push_back(ann.video_id);
        }
        manifest["splits"][split] = ids;
    }
    std::ofstream mout(fs::path(dir) / "manifest.json");
    if (!mout) throw DataError("cannot write manifest in " + dir);
    mout << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::string& dir, const std::string& split) {
    Dataset ds;
    const std::string ann_path = (fs::path(dir) / ("ann_" + split + ".json")).string();
    ds.annotations = read_annotations(ann_path, &ds.fps);
    int max_class = -1;
    for (const auto& ann : ds.annotations) {
        for (const auto& inst : ann.instances) max_class = std::max(max_class, inst.class_id);
    }
    ds.n_classes = max_class + 1;
    for (const auto& ann : ds.annotations) {
        std::string id;
        double fps = 0.0;
        DenseArray feat = read_features(
            (fs::path(dir) / "features" / (ann.video_id + ".feat")).string(), &id, &fps);
        if (id != ann.video_id) {
            throw DataError("feature file id mismatch for video '" + ann.video_id + "'");
        }
        ds.channels = static_cast<int>(feat.shape[0]);
        ds.features.push_back(std::move(feat));
    }
    return ds;
}

}  // namespace tadkit
