#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tadkit/checkpoint.hpp"
#include "tadkit/detect.hpp"
#include "tadkit/detections_io.hpp"
#include "tadkit/evaluation.hpp"
#include "tadkit/model_check.hpp"
#include "tadkit/synthdata.hpp"
#include "tadkit/trainer.hpp"

namespace fs = std::filesystem;
using namespace tadkit;

namespace {

RunConfig config_from_flag(const std::string& path, const std::string& head_override) {
    RunConfig cfg;
    if (!path.empty()) {
        cfg = load_run_config(path);
    } else {
        cfg = default_run_config(HeadKind::kAnchorFree);
    }
    if (!head_override.empty()) {
        // Re-derive the neck family when only the head kind is switched.
        json j = path.empty() ? json::object() : json::parse(std::ifstream(path));
        if (!j.contains("head")) j["head"] = json::object();
        j["head"]["kind"] = head_override;
        cfg = run_config_from_json(j);
    }
    return cfg;
}

WindowDirection parse_direction(const std::string& s) {
    if (s == "forward") return WindowDirection::kForward;
    if (s == "backward") return WindowDirection::kBackward;
    if (s == "bidirectional") return WindowDirection::kBidirectional;
    throw ConfigError("unknown window direction '" + s + "'");
}

FusionStage parse_stage(const std::string& s) {
    if (s == "backbone") return FusionStage::kBackbone;
    if (s == "neck") return FusionStage::kNeck;
    if (s == "head") return FusionStage::kHead;
    if (s == "post") return FusionStage::kPost;
    throw ConfigError("unknown fusion stage '" + s + "'");
}

TtaOptions parse_tta(const std::string& list, const std::string& fuse) {
    TtaOptions tta;
    tta.stage = parse_stage(fuse);
    std::string cur;
    std::istringstream ss(list);
    while (std::getline(ss, cur, ',')) {
        if (cur.empty()) continue;
        if (cur == "threecrop") tta.threecrop = true;
        else if (cur == "flip") tta.flip = true;
        else throw ConfigError("unknown tta view '" + cur + "'");
    }
    return tta;
}

template <typename T>
int run_train(const RunConfig& cfg, const std::string& data_dir, const std::string& out,
              const std::string& log_path, int threads) {
    Dataset ds = load_dataset(data_dir, "train");
    if (ds.channels != cfg.backbone.in_channels) {
        throw ConfigError("dataset channels (" + std::to_string(ds.channels) +
                          ") do not match backbone.in_channels");
    }
    Model<T> model(cfg, cfg.seed);
    const TrainStats stats = train(model, ds, cfg, out, log_path, threads);
    std::printf("trained %d iterations: loss_cls %.4f loss_reg %.4f total %.4f\n",
                stats.iterations, stats.final_loss_cls, stats.final_loss_reg,
                stats.final_loss_total);
    std::printf("checkpoint written to %s\n", out.c_str());
    return kExitOk;
}

template <typename T>
DetectionMap run_detect_map(const RunConfig& cfg, const std::string& ckpt,
                            const std::string& data_dir, const std::string& split,
                            const DetectOptions& opt) {
    Model<T> model(cfg, cfg.seed);
    load_checkpoint_params(ckpt, model);
    Dataset ds = load_dataset(data_dir, split);
    DetectionMap map;
    for (size_t v = 0; v < ds.annotations.size(); ++v) {
        map[ds.annotations[v].video_id] =
            detect_video(model, ds.features[v], ds.annotations[v], cfg, opt);
    }
    return map;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BasicTAD-style temporal action detection toolkit"};
    app.require_subcommand(1);
    int threads_flag = 0;
    app.add_option("--threads", threads_flag, "worker thread cap (default: TADKIT_THREADS or all cores)");

    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    std::string gen_spec, gen_out;
    gen->add_option("--spec", gen_spec, "run config JSON supplying the data section");
    gen->add_option("--out", gen_out, "output dataset directory")->required();

    auto* tr = app.add_subcommand("train", "train a detector");
    std::string tr_config, tr_data, tr_out, tr_log, tr_head;
    tr->add_option("--config", tr_config, "run config JSON");
    tr->add_option("--data", tr_data, "dataset directory")->required();
    tr->add_option("--out", tr_out, "checkpoint path")->required();
    tr->add_option("--log", tr_log, "metrics log path (line-delimited JSON)");
    tr->add_option("--head", tr_head, "head kind override: ab or af");

    auto* de = app.add_subcommand("detect", "run sliding-window inference");
    std::string de_ckpt, de_data, de_out, de_split = "test", de_tta, de_fuse = "neck",
                de_windows = "forward";
    de->add_option("--ckpt", de_ckpt, "checkpoint path")->required();
    de->add_option("--data", de_data, "dataset directory")->required();
    de->add_option("--out", de_out, "detections JSON path")->required();
    de->add_option("--split", de_split, "dataset split (default test)");
    de->add_option("--tta", de_tta, "comma list of views: threecrop,flip");
    de->add_option("--fuse", de_fuse, "fusion stage: backbone|neck|head|post");
    de->add_option("--windows", de_windows, "window direction: forward|backward|bidirectional");

    auto* ev = app.add_subcommand("eval", "score detections against annotations");
    std::string ev_dets, ev_ann, ev_thresholds, ev_json_out;
    ev->add_option("--dets", ev_dets, "detections JSON")->required();
    ev->add_option("--ann", ev_ann, "annotations JSON")->required();
    ev->add_option("--thresholds", ev_thresholds, "comma list of tIoU thresholds");
    ev->add_option("--json-out", ev_json_out, "also write the metric table as JSON");

    auto* be = app.add_subcommand("bench", "measure inference throughput");
    std::string be_ckpt, be_data, be_split = "test";
    be->add_option("--ckpt", be_ckpt, "checkpoint path")->required();
    be->add_option("--data", be_data, "dataset directory")->required();
    be->add_option("--split", be_split, "dataset split (default test)");

    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the configured model");
    std::string gc_config;
    bool gc_corrupt = false;
    uint64_t gc_seed = 5;
    gc->add_option("--config", gc_config, "run config JSON");
    gc->add_flag("--corrupt", gc_corrupt, "test hook: inject an analytic-gradient error");
    gc->add_option("--seed", gc_seed, "check seed");

    CLI11_PARSE(app, argc, argv);
    const int threads = resolve_threads(threads_flag);

    try {
        if (*gen) {
            const RunConfig cfg = config_from_flag(gen_spec, "");
            write_dataset(gen_out, cfg.data);
            std::printf("dataset written to %s\n", gen_out.c_str());
            return kExitOk;
        }
        if (*tr) {
            const RunConfig cfg = config_from_flag(tr_config, tr_head);
            return cfg.precision == Precision::f32
                       ? run_train<float>(cfg, tr_data, tr_out, tr_log, threads)
                       : run_train<double>(cfg, tr_data, tr_out, tr_log, threads);
        }
        if (*de) {
            const RunConfig cfg = checkpoint_config(de_ckpt);
            DetectOptions opt;
            opt.direction = parse_direction(de_windows);
            opt.tta = parse_tta(de_tta, de_fuse);
            opt.threads = threads;
            const DetectionMap map =
                cfg.precision == Precision::f32
                    ? run_detect_map<float>(cfg, de_ckpt, de_data, de_split, opt)
                    : run_detect_map<double>(cfg, de_ckpt, de_data, de_split, opt);
            write_detections(de_out, map);
            size_t n = 0;
            for (const auto& [_, dets] : map) n += dets.size();
            std::printf("%zu detections over %zu videos written to %s\n", n, map.size(),
                        de_out.c_str());
            return kExitOk;
        }
        if (*ev) {
            const DetectionMap dets = read_detections(ev_dets);
            double fps = 0.0;
            const auto anns = read_annotations(ev_ann, &fps);
            EvalConfig ecfg;
            if (!ev_thresholds.empty()) {
                ecfg.tiou_thresholds.clear();
                std::istringstream ss(ev_thresholds);
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    if (!tok.empty()) ecfg.tiou_thresholds.push_back(std::stod(tok));
                }
                ecfg.validate();
            }
            int n_classes = 0;
            for (const auto& a : anns) {
                for (const auto& i : a.instances) n_classes = std::max(n_classes, i.class_id + 1);
            }
            const EvalResult r = evaluate(dets, anns, ecfg, n_classes);
            std::fputs(eval_table_text(r).c_str(), stdout);
            if (!ev_json_out.empty()) {
                std::ofstream out(ev_json_out);
                if (!out) throw DataError("cannot write " + ev_json_out);
                out << eval_to_json(r).dump(2) << "\n";
            }
            return kExitOk;
        }
        if (*be) {
            const RunConfig cfg = checkpoint_config(be_ckpt);
            DetectOptions opt;
            opt.threads = threads;
            Dataset ds = load_dataset(be_data, be_split);
            size_t frames = 0;
            for (const auto& f : ds.features) frames += f.shape[1];
            const auto t0 = std::chrono::steady_clock::now();
            if (cfg.precision == Precision::f32) {
                run_detect_map<float>(cfg, be_ckpt, be_data, be_split, opt);
            } else {
                run_detect_map<double>(cfg, be_ckpt, be_data, be_split, opt);
            }
            const double sec =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::printf("%zu frames in %.3f s: %.1f frames/s\n", frames, sec, frames / sec);
            return kExitOk;
        }
        if (*gc) {
            RunConfig cfg = gc_config.empty() ? default_run_config(HeadKind::kAnchorFree)
                                              : load_run_config(gc_config);
            cfg.precision = Precision::f64;  // finite differences need 64-bit
            const GradCheckReport rep = model_grad_check(cfg, gc_seed, 200, gc_corrupt);
            std::printf("gradcheck: max relative error %.3e over %zu coordinates (worst: %s)\n",
                        rep.max_rel_err, rep.coords_checked, rep.worst_param.c_str());
            if (rep.max_rel_err >= 1e-4) {
                std::fprintf(stderr, "gradcheck FAILED (threshold 1e-4)\n");
                return kExitNumeric;
            }
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return kExitOk;
}
