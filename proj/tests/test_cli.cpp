#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tadkit/detections_io.hpp"
#include "tadkit/synthdata.hpp"

using namespace tadkit;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    static const std::string base = TAD_CLI_PATH;
    const std::string out_path =
        (fs::temp_directory_path() / "tadkit_cli_out.txt").string();
    const std::string cmd = base + " " + args + " > " + out_path + " 2>&1";
    const int rc = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream in(out_path);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Tiny end-to-end config shared by the CLI tests.
void write_tiny_config(const std::string& path, const std::string& head) {
    std::ofstream out(path);
    out << R"({
  "seed": 3,
  "precision": "f32",
  "clip_frames": 32,
  "data": {"seed": 3, "n_train_videos": 4, "n_test_videos": 2, "n_classes": 2,
           "fps": 2.0, "duration_min": 18, "duration_max": 26,
           "instances_min": 1, "instances_max": 2,
           "length_min": 2.0, "length_max": 6.0, "channels": 8},
  "backbone": {"stage_channels": [8, 8, 8, 8]},
  "neck": {"channels": )"
        << (head == "ab" ? 4 : 8) << R"(, "tdm_channels": 8},
  "head": {"kind": ")"
        << head << R"("},
  "optim": {"batch_size": 2, "iterations": 12, "warmup_iters": 4, "cosine_period": 8,
            "checkpoint_every": 0}
})";
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& f) const { return (path / f).string(); }
};

}  // namespace

TEST_CASE("cli: gen is deterministic and validates specs") {
    TempDir dir("tadkit_cli_gen");
    write_tiny_config(dir / "cfg.json", "af");

    const auto r1 = run_cli("gen --spec " + (dir / "cfg.json") + " --out " + (dir / "d1"));
    REQUIRE_MESSAGE(r1.exit_code == 0, r1.output);
    const auto r2 = run_cli("gen --spec " + (dir / "cfg.json") + " --out " + (dir / "d2"));
    REQUIRE(r2.exit_code == 0);
    CHECK(file_bytes(dir / "d1/ann_train.json") == file_bytes(dir / "d2/ann_train.json"));
    CHECK(file_bytes(dir / "d1/features/train_0000.feat") ==
          file_bytes(dir / "d2/features/train_0000.feat"));

    // over-dense spec: too many long instances in short videos
    std::ofstream bad(dir / "dense.json");
    bad << R"({"data": {"duration_min": 4, "duration_max": 5, "instances_min": 6,
                "instances_max": 6, "length_min": 2.0, "length_max": 3.0}})";
    bad.close();
    const auto r3 = run_cli("gen --spec " + (dir / "dense.json") + " --out " + (dir / "d3"));
    CHECK(r3.exit_code == 2);
}

TEST_CASE("cli: unknown config keys exit with the config code") {
    TempDir dir("tadkit_cli_cfg");
    std::ofstream bad(dir / "bad.json");
    bad << R"({"optim": {"lr_peeek": 1}})";
    bad.close();
    const auto r = run_cli("gen --spec " + (dir / "bad.json") + " --out " + (dir / "x"));
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("/optim/lr_peeek") != std::string::npos);
}

TEST_CASE("cli: train, detect, eval, bench round trip for both heads") {
    TempDir dir("tadkit_cli_pipe");
    for (const std::string head : {"af", "ab"}) {
        write_tiny_config(dir / ("cfg_" + head + ".json"), head);
        const auto gen =
            run_cli("gen --spec " + (dir / ("cfg_" + head + ".json")) + " --out " + (dir / "data"));
        REQUIRE_MESSAGE(gen.exit_code == 0, gen.output);

        const auto tr = run_cli("train --config " + (dir / ("cfg_" + head + ".json")) +
                                " --data " + (dir / "data") + " --out " +
                                (dir / (head + ".ckpt")) + " --log " + (dir / (head + ".log")));
        REQUIRE_MESSAGE(tr.exit_code == 0, tr.output);
        CHECK(fs::exists(dir / (head + ".ckpt")));
        // metrics log: one JSON line per iteration
        std::ifstream log(dir / (head + ".log"));
        std::string line;
        int lines = 0;
        while (std::getline(log, line)) {
            if (line.empty()) continue;
            const json parsed = json::parse(line);
            CHECK(parsed.contains("iter"));
            CHECK(parsed.contains("lr"));
            CHECK(parsed.contains("loss_total"));
            ++lines;
        }
        CHECK(lines == 12);

        const auto de = run_cli("detect --ckpt " + (dir / (head + ".ckpt")) + " --data " +
                                (dir / "data") + " --out " + (dir / (head + ".dets.json")));
        REQUIRE_MESSAGE(de.exit_code == 0, de.output);
        CHECK_NOTHROW(read_detections(dir / (head + ".dets.json")));

        const auto ev = run_cli("eval --dets " + (dir / (head + ".dets.json")) + " --ann " +
                                (dir / "data/ann_test.json"));
        REQUIRE_MESSAGE(ev.exit_code == 0, ev.output);
        CHECK(ev.output.find("Avg") != std::string::npos);

        const auto be = run_cli("bench --ckpt " + (dir / (head + ".ckpt")) + " --data " +
                                (dir / "data"));
        REQUIRE_MESSAGE(be.exit_code == 0, be.output);
        CHECK(be.output.find("frames/s") != std::string::npos);
    }
}

TEST_CASE("cli: single-view neck fusion equals the plain path") {
    TempDir dir("tadkit_cli_fuse");
    write_tiny_config(dir / "cfg.json", "af");
    REQUIRE(run_cli("gen --spec " + (dir / "cfg.json") + " --out " + (dir / "data")).exit_code ==
            0);
    REQUIRE(run_cli("train --config " + (dir / "cfg.json") + " --data " + (dir / "data") +
                    " --out " + (dir / "m.ckpt"))
                .exit_code == 0);
    const auto plain = run_cli("detect --ckpt " + (dir / "m.ckpt") + " --data " + (dir / "data") +
                               " --out " + (dir / "plain.json"));
    REQUIRE(plain.exit_code == 0);
    const auto fused = run_cli("detect --ckpt " + (dir / "m.ckpt") + " --data " + (dir / "data") +
                               " --out " + (dir / "fused.json") + " --fuse neck");
    REQUIRE(fused.exit_code == 0);
    CHECK(file_bytes(dir / "plain.json") == file_bytes(dir / "fused.json"));
}

TEST_CASE("cli: checkpoint-detect-eval reruns are byte identical") {
    TempDir dir("tadkit_cli_det");
    write_tiny_config(dir / "cfg.json", "af");
    REQUIRE(run_cli("gen --spec " + (dir / "cfg.json") + " --out " + (dir / "data")).exit_code ==
            0);
    REQUIRE(run_cli("train --config " + (dir / "cfg.json") + " --data " + (dir / "data") +
                    " --out " + (dir / "m.ckpt"))
                .exit_code == 0);
    for (const char* out : {"a.json", "b.json"}) {
        REQUIRE(run_cli("detect --ckpt " + (dir / "m.ckpt") + " --data " + (dir / "data") +
                        " --out " + (dir / out) + " --windows bidirectional")
                    .exit_code == 0);
    }
    CHECK(file_bytes(dir / "a.json") == file_bytes(dir / "b.json"));
}

TEST_CASE("cli: malformed detections exit with the data code and a pointer") {
    TempDir dir("tadkit_cli_bad");
    write_tiny_config(dir / "cfg.json", "af");
    REQUIRE(run_cli("gen --spec " + (dir / "cfg.json") + " --out " + (dir / "data")).exit_code ==
            0);
    std::ofstream bad(dir / "bad.json");
    bad << R"({"test_0000": [{"start": 5.0, "end": 2.0, "class": 0, "score": 0.5}]})";
    bad.close();
    const auto r =
        run_cli("eval --dets " + (dir / "bad.json") + " --ann " + (dir / "data/ann_test.json"));
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("/test_0000/0") != std::string::npos);
}

TEST_CASE("cli: gradcheck passes clean and fails the corrupted control") {
    TempDir dir("tadkit_cli_gc");
    std::ofstream cfg(dir / "gc.json");
    cfg << R"({
  "precision": "f64", "clip_frames": 32,
  "data": {"n_classes": 2, "channels": 6, "fps": 2.0},
  "backbone": {"stage_channels": [6, 6, 6, 6]},
  "neck": {"channels": 6, "tdm_channels": 6},
  "head": {"kind": "af"}
})";
    cfg.close();
    const auto ok = run_cli("gradcheck --config " + (dir / "gc.json"));
    REQUIRE_MESSAGE(ok.exit_code == 0, ok.output);
    const auto bad = run_cli("gradcheck --config " + (dir / "gc.json") + " --corrupt");
    CHECK(bad.exit_code == 4);
}
