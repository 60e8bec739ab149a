#include <doctest.h>

#include <cmath>

#include "support/checks.hpp"
#include "tadkit/detect.hpp"
#include "tadkit/suppress.hpp"
#include "tadkit/windows.hpp"

using namespace tadkit;
using namespace tadkit::testsupport;

TEST_CASE("window planning") {
    SUBCASE("240 frames, clip 96: stride 24, seven forward windows") {
        const WindowPlan p = plan_windows(240, 96, WindowDirection::kForward);
        CHECK(p.stride == 24);
        REQUIRE(p.starts.size() == 7);
        for (int i = 0; i < 7; ++i) CHECK(p.starts[i] == i * 24);
        CHECK(p.starts.back() == 240 - 96);
    }
    SUBCASE("exact fit gives a single window") {
        const WindowPlan p = plan_windows(96, 96, WindowDirection::kForward);
        CHECK(p.starts == std::vector<int>{0});
    }
    SUBCASE("short video gives a single zero-padded window") {
        const WindowPlan p = plan_windows(40, 96, WindowDirection::kBidirectional);
        CHECK(p.starts == std::vector<int>{0});
    }
    SUBCASE("backward mirrors the forward starts") {
        const WindowPlan f = plan_windows(240, 96, WindowDirection::kForward);
        const WindowPlan b = plan_windows(240, 96, WindowDirection::kBackward);
        std::vector<int> reversed(f.starts.rbegin(), f.starts.rend());
        CHECK(b.starts == reversed);
    }
    SUBCASE("bidirectional covers the union without duplicates") {
        const WindowPlan p = plan_windows(250, 96, WindowDirection::kBidirectional);
        std::set<int> uniq(p.starts.begin(), p.starts.end());
        CHECK(uniq.size() == p.starts.size());
        const WindowPlan f = plan_windows(250, 96, WindowDirection::kForward);
        const WindowPlan b = plan_windows(250, 96, WindowDirection::kBackward);
        for (int s : f.starts) CHECK(uniq.count(s));
        for (int s : b.starts) CHECK(uniq.count(s));
        CHECK(p.starts.size() >= f.starts.size());
    }
    SUBCASE("every frame is covered") {
        for (int frames : {97, 120, 240, 250, 1000}) {
            const WindowPlan p = plan_windows(frames, 96, WindowDirection::kForward);
            std::vector<bool> covered(frames, false);
            for (int s : p.starts) {
                for (int f = s; f < std::min(frames, s + 96); ++f) covered[f] = true;
            }
            for (bool c : covered) CHECK(c);
        }
    }
}

TEST_CASE("nms worked example and basics") {
    std::vector<Detection> dets = {{Interval(0, 10), 0, 0.9},
                                   {Interval(1, 11), 0, 0.8},
                                   {Interval(20, 30), 0, 0.7}};
    const auto kept = nms(dets, 0.5);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].interval.start == 0.0);
    CHECK(kept[1].interval.start == 20.0);

    const auto single = nms({{Interval(3, 4), 1, 0.2}}, 0.5);
    CHECK(single.size() == 1);
}

TEST_CASE("nms equals the brute-force oracle on random sets") {
    Prng rng(51);
    for (int rep = 0; rep < 300; ++rep) {
        std::vector<Detection> dets;
        const int n = 1 + static_cast<int>(rng.next_below(10));
        for (int i = 0; i < n; ++i) {
            const double s = rng.uniform(0, 40);
            dets.emplace_back(Interval(s, s + rng.uniform(0.5, 15)), 0,
                              0.01 * std::round(rng.uniform(1, 99)));
        }
        const double thr = rng.uniform(0.2, 0.8);
        const auto got = nms(dets, thr);
        const auto want = oracle_nms(dets, thr);
        REQUIRE(got.size() == want.size());
        for (size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].interval == want[i].interval);
            CHECK(got[i].score == want[i].score);
        }
    }
}

TEST_CASE("suppression is idempotent and output is a subset of input") {
    Prng rng(52);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<Detection> dets;
        const int n = 2 + static_cast<int>(rng.next_below(12));
        for (int i = 0; i < n; ++i) {
            const double s = rng.uniform(0, 30);
            dets.emplace_back(Interval(s, s + rng.uniform(0.5, 12)), 0, rng.uniform(0.05, 1.0));
        }
        const auto once = nms(dets, 0.5);
        const auto twice = nms(once, 0.5);
        REQUIRE(once.size() == twice.size());
        for (size_t i = 0; i < once.size(); ++i) CHECK(once[i].interval == twice[i].interval);
        for (const auto& k : once) {
            bool found = false;
            for (const auto& d : dets) found |= d.interval == k.interval && d.score == k.score;
            CHECK(found);
        }
        // duplicated input suppresses to the same survivors
        std::vector<Detection> doubled = dets;
        doubled.insert(doubled.end(), dets.begin(), dets.end());
        const auto from_doubled = nms(doubled, 0.5);
        REQUIRE(from_doubled.size() == once.size());
        for (size_t i = 0; i < once.size(); ++i) {
            CHECK(from_doubled[i].interval == once[i].interval);
        }
    }
}

TEST_CASE("nmw merges clusters by score-weighted overlap") {
    SUBCASE("singleton cluster is unchanged") {
        const auto out = nmw({{Interval(2, 6), 0, 0.4}}, 0.5);
        REQUIRE(out.size() == 1);
        CHECK(out[0].interval == Interval(2, 6));
        CHECK(out[0].score == 0.4);
    }
    SUBCASE("worked two-member example") {
        const auto out = nmw({{Interval(0, 10), 0, 0.9}, {Interval(1, 11), 0, 0.8}}, 0.5);
        REQUIRE(out.size() == 1);
        // weights 0.9 and 0.8 * 9/11
        CHECK(out[0].interval.start == doctest::Approx(0.421).epsilon(1e-3));
        CHECK(out[0].interval.end == doctest::Approx(10.421).epsilon(1e-3));
        CHECK(out[0].score == 0.9);
    }
    SUBCASE("identical members collapse to the same interval") {
        const auto out = nmw({{Interval(3, 9), 0, 0.9},
                              {Interval(3, 9), 0, 0.5},
                              {Interval(3, 9), 0, 0.2}},
                             0.5);
        REQUIRE(out.size() == 1);
        CHECK(out[0].interval.start == doctest::Approx(3.0));
        CHECK(out[0].interval.end == doctest::Approx(9.0));
    }
    SUBCASE("merged boundaries stay inside the member hull") {
        Prng rng(53);
        for (int rep = 0; rep < 1000; ++rep) {
            std::vector<Detection> dets;
            const int n = 2 + static_cast<int>(rng.next_below(6));
            const double base = rng.uniform(0, 20);
            for (int i = 0; i < n; ++i) {
                const double s = base + rng.uniform(-2, 2);
                dets.emplace_back(Interval(s, s + rng.uniform(4, 8)), 0,
                                  rng.uniform(0.05, 1.0));
            }
            double min_s = 1e18, max_s = -1e18, min_e = 1e18, max_e = -1e18;
            for (const auto& d : dets) {
                min_s = std::min(min_s, d.interval.start);
                max_s = std::max(max_s, d.interval.start);
                min_e = std::min(min_e, d.interval.end);
                max_e = std::max(max_e, d.interval.end);
            }
            for (const auto& m : nmw(dets, 0.3)) {
                CHECK(m.interval.start >= min_s - 1e-9);
                CHECK(m.interval.start <= max_s + 1e-9);
                CHECK(m.interval.end >= min_e - 1e-9);
                CHECK(m.interval.end <= max_e + 1e-9);
            }
        }
    }
}

namespace {

RunConfig detect_config() {
    RunConfig cfg = default_run_config(HeadKind::kAnchorFree);
    cfg.precision = Precision::f64;
    cfg.data.channels = 8;
    cfg.data.n_classes = 2;
    cfg.data.fps = 2.0;
    cfg.backbone.in_channels = 8;
    cfg.backbone.stage_channels = {8, 8, 8, 8};
    cfg.neck.channels = 8;
    cfg.head.channels = 8;
    cfg.head.num_classes = 2;
    cfg.clip_frames = 32;
    cfg.finalize();
    return cfg;
}

}  // namespace

TEST_CASE("decoded detections shift exactly with the window offset") {
    RunConfig cfg = detect_config();
    Model<double> model(cfg, 61);
    Prng rng(62);
    Tensor<double> x(8, 32, 1);
    for (auto& v : x.v) v = rng.gaussian();

    const auto pyramid = model.pyramid_levels(32, cfg.data.fps);
    const AnchorSet anchors = generate_anchors(pyramid, 2.0);
    const PointSet points = build_points(pyramid, cfg.head.af_range_borders);

    Graph<double> g(nullptr, false);
    const auto pyr = model.forward(g, g.input(x));
    std::vector<Detection> base, shifted;
    decode_window(g, pyr, cfg.head, anchors, points, 16.0, 0.0, 0.001, &base);
    const double delta = 37.5;
    decode_window(g, pyr, cfg.head, anchors, points, 16.0, delta, 0.001, &shifted);
    REQUIRE(base.size() == shifted.size());
    REQUIRE(base.size() > 0);
    for (size_t i = 0; i < base.size(); ++i) {
        CHECK(shifted[i].interval.start - base[i].interval.start ==
              doctest::Approx(delta).epsilon(1e-9));
        CHECK(shifted[i].interval.end - base[i].interval.end ==
              doctest::Approx(delta).epsilon(1e-9));
    }
}

TEST_CASE("fusing identical views reproduces the single-view pyramid") {
    RunConfig cfg = detect_config();
    Model<double> model(cfg, 63);
    Prng rng(64);
    Tensor<double> x(8, 32, 1);
    for (auto& v : x.v) v = rng.gaussian();

    Graph<double> gs(nullptr, false);
    const auto single = model.forward(gs, gs.input(x));

    for (FusionStage stage : {FusionStage::kBackbone, FusionStage::kNeck, FusionStage::kHead}) {
        Graph<double> g(nullptr, false);
        std::vector<int> views = {g.input(x), g.input(x), g.input(x)};
        const auto fused = forward_fused(g, model, views, stage);
        REQUIRE(fused.levels.size() == single.levels.size());
        for (size_t l = 0; l < fused.levels.size(); ++l) {
            const auto& a = g.val(fused.levels[l].cls);
            const auto& b = gs.val(single.levels[l].cls);
            REQUIRE(a.v.size() == b.v.size());
            for (size_t i = 0; i < a.v.size(); ++i) {
                CHECK(a.v[i] == doctest::Approx(b.v[i]).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("untrained model with bias prior yields only low scores") {
    RunConfig cfg = detect_config();
    Model<double> model(cfg, 65);
    DenseArray feat({8, 80});  // all-zero features
    VideoAnnotation ann;
    ann.video_id = "empty";
    ann.duration = 40.0;
    ann.fps = 2.0;
    DetectOptions opt;
    const auto dets = detect_video(model, feat, ann, cfg, opt);
    CHECK(dets.size() <= static_cast<size_t>(cfg.post.max_detections));
    for (const auto& d : dets) CHECK(d.score < 0.5);
}
