#include <doctest.h>

#include <filesystem>

#include "support/checks.hpp"
#include "tadkit/trainer.hpp"

using namespace tadkit;

namespace {

RunConfig smoke_config(HeadKind kind) {
    RunConfig cfg = default_run_config(kind);
    cfg.precision = Precision::f64;
    cfg.data.seed = 5;
    cfg.data.n_train_videos = 4;
    cfg.data.n_test_videos = 1;
    cfg.data.n_classes = 2;
    cfg.data.channels = 8;
    cfg.data.fps = 2.0;
    cfg.data.duration_min = 20.0;
    cfg.data.duration_max = 30.0;
    cfg.data.instances_min = 1;
    cfg.data.instances_max = 2;
    cfg.data.length_min = 2.0;
    cfg.data.length_max = 8.0;
    cfg.backbone.in_channels = 8;
    cfg.backbone.stage_channels = {8, 8, 8, 8};
    cfg.neck.channels = kind == HeadKind::kAnchorFree ? 8 : 4;
    cfg.neck.tdm_channels = 8;
    cfg.head.channels = cfg.neck.channels;
    cfg.head.num_classes = 2;
    cfg.clip_frames = 32;
    cfg.optim.batch_size = 2;
    cfg.optim.iterations = 10;
    cfg.optim.warmup_iters = 5;
    cfg.optim.cosine_period = 10;
    cfg.optim.checkpoint_every = 0;
    cfg.finalize();
    return cfg;
}

}  // namespace

TEST_CASE("learning rate schedule endpoints and midpoints") {
    OptimConfig cfg;
    CHECK(lr_at(0, cfg) == doctest::Approx(0.001));
    CHECK(lr_at(250, cfg) == doctest::Approx(0.0055));
    CHECK(lr_at(500, cfg) == doctest::Approx(0.01));
    CHECK(lr_at(500 + 600, cfg) == doctest::Approx((0.01 + 0.0001) / 2.0));
    CHECK(lr_at(500 + 1200, cfg) == doctest::Approx(0.0001));
    CHECK(lr_at(5000, cfg) == doctest::Approx(0.0001));  // floor hold
    SUBCASE("continuity at the warmup/cosine junction") {
        CHECK(lr_at(499, cfg) == doctest::Approx(0.01).epsilon(1e-2));
        CHECK(lr_at(500, cfg) == doctest::Approx(0.01));
        CHECK(lr_at(501, cfg) == doctest::Approx(0.01).epsilon(1e-2));
    }
    SUBCASE("restart mode wraps the cosine") {
        OptimConfig rc = cfg;
        rc.cosine_restarts = true;
        CHECK(lr_at(500 + 1200, rc) == doctest::Approx(0.01));  // new period starts at peak
        CHECK(lr_at(500 + 1800, rc) == doctest::Approx((0.01 + 0.0001) / 2.0));
    }
}

TEST_CASE("sgd update rule") {
    OptimConfig oc;
    oc.momentum = 0.9;
    oc.weight_decay = 0.0;
    std::vector<Param<double>> params(1);
    params[0].name = "w";
    params[0].value = Tensor<double>(1, 2, 1);
    params[0].value.v = {1.0, -2.0};
    SgdState<double> st(params);

    SUBCASE("zero gradient leaves weights alone") {
        GradStore<double> g(1);
        sgd_step(params, g, st, 0.1, oc);
        CHECK(params[0].value.v[0] == 1.0);
        CHECK(params[0].value.v[1] == -2.0);
    }
    SUBCASE("single step is w - lr*g; second adds momentum") {
        GradStore<double> g(1);
        g[0] = Tensor<double>(1, 2, 1);
        g[0].v = {0.5, 0.5};
        sgd_step(params, g, st, 0.1, oc);
        CHECK(params[0].value.v[0] == doctest::Approx(1.0 - 0.1 * 0.5));
        const double w1 = params[0].value.v[0];
        sgd_step(params, g, st, 0.1, oc);
        CHECK(w1 - params[0].value.v[0] == doctest::Approx(0.1 * 0.5 * 1.9));
    }
    SUBCASE("weight decay shrinks geometrically with zero gradient, no momentum") {
        OptimConfig wd = oc;
        wd.momentum = 0.0;
        wd.weight_decay = 0.01;
        GradStore<double> g(1);
        double expect = 1.0;
        for (int i = 0; i < 5; ++i) {
            sgd_step(params, g, st, 0.1, wd);
            expect *= 1.0 - 0.1 * 0.01;
            CHECK(params[0].value.v[0] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    SUBCASE("non-finite gradient aborts with the parameter name") {
        GradStore<double> g(1);
        g[0] = Tensor<double>(1, 2, 1);
        g[0].v = {std::numeric_limits<double>::quiet_NaN(), 0.0};
        CHECK_THROWS_WITH_AS(sgd_step(params, g, st, 0.1, oc),
                             doctest::Contains("'w'"), NumericError);
    }
}

TEST_CASE("training smoke: loss decreases over 50 iterations on a fixed batch") {
    RunConfig cfg = smoke_config(HeadKind::kAnchorFree);
    cfg.data.n_train_videos = 1;  // a single video: every batch sees the same clip pool
    cfg.optim.warmup_iters = 0;
    cfg.optim.lr_peak = 1e-3;
    cfg.optim.lr_floor = 0.999e-3;
    cfg.optim.cosine_period = 100000;
    Dataset ds = generate_dataset(cfg.data, "train");

    double initial;
    {
        RunConfig probe = cfg;
        probe.optim.iterations = 1;
        probe.optim.lr_peak = 1e-12;
        probe.optim.lr_floor = 0.999e-12;
        Model<double> model(probe, probe.seed);
        initial = train(model, ds, probe, "", "", 2).final_loss_total;
    }
    RunConfig full = cfg;
    full.optim.iterations = 50;
    Model<double> model(full, full.seed);
    const TrainStats stats = train(model, ds, full, "", "", 2);
    CHECK(stats.iterations == 50);
    CHECK(stats.final_loss_total < initial);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
    RunConfig cfg = smoke_config(HeadKind::kAnchorFree);
    cfg.optim.lr_peak = 1e-15;
    cfg.optim.lr_floor = 0.9e-15;
    cfg.optim.warmup_start = 0.5e-15;
    cfg.optim.weight_decay = 0.0;
    cfg.optim.iterations = 3;
    Dataset ds = generate_dataset(cfg.data, "train");
    Model<double> model(cfg, cfg.seed);
    std::vector<std::vector<double>> before;
    for (const auto& p : model.params()) before.push_back(p.value.v);
    train(model, ds, cfg, "", "", 2);
    for (size_t i = 0; i < before.size(); ++i) {
        for (size_t k = 0; k < before[i].size(); ++k) {
            CHECK(model.params()[i].value.v[k] == doctest::Approx(before[i][k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
    RunConfig cfg = smoke_config(HeadKind::kAnchorBased);
    Dataset ds = generate_dataset(cfg.data, "train");
    Model<double> m1(cfg, cfg.seed), m2(cfg, cfg.seed);
    train(m1, ds, cfg, "", "", 1);
    train(m2, ds, cfg, "", "", 2);  // different worker count, same reduction order
    for (size_t i = 0; i < m1.params().size(); ++i) {
        CHECK(m1.params()[i].value.v == m2.params()[i].value.v);
    }
}
