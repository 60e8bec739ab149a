#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "support/checks.hpp"
#include "tadkit/synthdata.hpp"

using namespace tadkit;

namespace fs = std::filesystem;

namespace {

SynthSpec tiny_spec() {
    SynthSpec s;
    s.seed = 17;
    s.n_train_videos = 6;
    s.n_test_videos = 3;
    s.n_classes = 2;
    s.fps = 2.0;
    s.duration_min = 15.0;
    s.duration_max = 25.0;
    s.instances_min = 1;
    s.instances_max = 3;
    s.length_min = 1.0;
    s.length_max = 5.0;
    s.channels = 16;
    return s;
}

}  // namespace

TEST_CASE("generation is bit-deterministic in the seed") {
    const SynthSpec spec = tiny_spec();
    const Dataset a = generate_dataset(spec, "train");
    const Dataset b = generate_dataset(spec, "train");
    REQUIRE(a.features.size() == b.features.size());
    for (size_t i = 0; i < a.features.size(); ++i) {
        CHECK(a.features[i].data == b.features[i].data);
        CHECK(a.annotations[i].duration == b.annotations[i].duration);
    }
    SynthSpec other = spec;
    other.seed = 18;
    const Dataset c = generate_dataset(other, "train");
    CHECK(c.features[0].data != a.features[0].data);
}

TEST_CASE("train and test splits are disjoint by id and content") {
    const SynthSpec spec = tiny_spec();
    const Dataset tr = generate_dataset(spec, "train");
    const Dataset te = generate_dataset(spec, "test");
    for (const auto& a : tr.annotations) {
        for (const auto& b : te.annotations) CHECK(a.video_id != b.video_id);
    }
}

TEST_CASE("planted instances respect duration bounds and never overlap") {
    SynthSpec spec = tiny_spec();
    spec.n_train_videos = 200;
    const Dataset ds = generate_dataset(spec, "train");
    for (const auto& ann : ds.annotations) {
        for (size_t i = 0; i < ann.instances.size(); ++i) {
            const auto& a = ann.instances[i].interval;
            CHECK(a.start >= 0.0);
            CHECK(a.end <= ann.duration);
            for (size_t j = i + 1; j < ann.instances.size(); ++j) {
                CHECK(overlap_length(a, ann.instances[j].interval) == 0.0);
            }
        }
    }
}

TEST_CASE("over-dense specs fail loudly") {
    SynthSpec spec = tiny_spec();
    spec.duration_min = 4.0;
    spec.duration_max = 5.0;
    spec.instances_min = 6;
    spec.instances_max = 6;
    spec.length_min = 2.0;
    spec.length_max = 3.0;
    CHECK_THROWS_AS(generate_dataset(spec, "train"), ConfigError);
}

TEST_CASE("class signatures are unit norm and near-orthogonal") {
    SynthSpec spec = tiny_spec();
    spec.channels = 64;
    spec.n_classes = 5;
    const auto sigs = class_signatures(spec);
    REQUIRE(sigs.size() == 5);
    for (size_t a = 0; a < sigs.size(); ++a) {
        double norm = 0.0;
        for (double v : sigs[a]) norm += v * v;
        CHECK(std::sqrt(norm) == doctest::Approx(1.0));
        for (size_t b = a + 1; b < sigs.size(); ++b) {
            double dot = 0.0;
            for (int c = 0; c < spec.channels; ++c) dot += sigs[a][c] * sigs[b][c];
            CHECK(std::abs(dot) < 0.5);
        }
    }
}

TEST_CASE("signature strength controls the planted signal") {
    SynthSpec quiet = tiny_spec();
    quiet.noise_sigma = 0.0;
    quiet.signature_strength = 0.0;
    const Dataset ds = generate_dataset(quiet, "train");
    for (const auto& f : ds.features) {
        for (double v : f.data) CHECK(v == 0.0);
    }
}

TEST_CASE("annotation files round trip and reject schema violations") {
    const SynthSpec spec = tiny_spec();
    const Dataset ds = generate_dataset(spec, "train");
    const auto dir = fs::temp_directory_path() / "tadkit_synth_test";
    fs::create_directories(dir);
    const std::string path = (dir / "ann.json").string();
    write_annotations(path, spec.fps, ds.annotations);

    double fps = 0.0;
    const auto loaded = read_annotations(path, &fps, spec.n_classes);
    CHECK(fps == spec.fps);
    REQUIRE(loaded.size() == ds.annotations.size());
    for (size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].video_id == ds.annotations[i].video_id);
        CHECK(loaded[i].duration == ds.annotations[i].duration);
        REQUIRE(loaded[i].instances.size() == ds.annotations[i].instances.size());
        for (size_t k = 0; k < loaded[i].instances.size(); ++k) {
            CHECK(loaded[i].instances[k].interval == ds.annotations[i].instances[k].interval);
            CHECK(loaded[i].instances[k].class_id == ds.annotations[i].instances[k].class_id);
        }
    }

    SUBCASE("instance with end <= start is rejected with a pointer") {
        std::ofstream bad(path);
        bad << R"({"version":1,"fps":2.0,"videos":[{"id":"v","duration":10.0,)"
            << R"("instances":[{"start":5.0,"end":5.0,"class":0}]}]})";
        bad.close();
        CHECK_THROWS_WITH_AS(read_annotations(path, nullptr),
                             doctest::Contains("/videos/0/instances/0"), DataError);
    }
    SUBCASE("instance outside the duration is rejected") {
        std::ofstream bad(path);
        bad << R"({"version":1,"fps":2.0,"videos":[{"id":"v","duration":10.0,)"
            << R"("instances":[{"start":5.0,"end":11.0,"class":0}]}]})";
        bad.close();
        CHECK_THROWS_AS(read_annotations(path, nullptr), DataError);
    }
    SUBCASE("unknown keys are schema violations") {
        std::ofstream bad(path);
        bad << R"({"version":1,"fps":2.0,"videos":[{"id":"v","duration":10.0,"bogus":3,)"
            << R"("instances":[]}]})";
        bad.close();
        CHECK_THROWS_WITH_AS(read_annotations(path, nullptr), doctest::Contains("bogus"),
                             DataError);
    }
    fs::remove_all(dir);
}

TEST_CASE("feature files round trip through disk") {
    const SynthSpec spec = tiny_spec();
    const Dataset ds = generate_dataset(spec, "train");
    const auto dir = fs::temp_directory_path() / "tadkit_feat_test";
    fs::create_directories(dir);
    const std::string path = (dir / "x.feat").string();
    write_features(path, ds.annotations[0].video_id, spec.fps, ds.features[0]);
    std::string id;
    double fps = 0.0;
    const DenseArray back = read_features(path, &id, &fps);
    CHECK(id == ds.annotations[0].video_id);
    CHECK(fps == spec.fps);
    CHECK(back.shape == ds.features[0].shape);
    CHECK(back.data == ds.features[0].data);  // both f32-quantized
    fs::remove_all(dir);
}

TEST_CASE("dataset directory round trip") {
    const SynthSpec spec = tiny_spec();
    const auto dir = fs::temp_directory_path() / "tadkit_ds_test";
    fs::remove_all(dir);
    write_dataset(dir.string(), spec);
    CHECK(fs::exists(dir / "manifest.json"));
    const Dataset loaded = load_dataset(dir.string(), "train");
    const Dataset direct = generate_dataset(spec, "train");
    REQUIRE(loaded.features.size() == direct.features.size());
    for (size_t i = 0; i < loaded.features.size(); ++i) {
        CHECK(loaded.features[i].data == direct.features[i].data);
    }
    fs::remove_all(dir);
}

TEST_CASE("view transforms") {
    const SynthSpec spec = tiny_spec();
    const Dataset ds = generate_dataset(spec, "train");
    const DenseArray& f = ds.features[0];
    SUBCASE("flip is an involution") {
        const DenseArray back = flip_view(flip_view(f));
        CHECK(back.data == f.data);
    }
    SUBCASE("crop view 0 is the identity; others are deterministic perturbations") {
        const DenseArray v0 = crop_view(f, "train_0000", 0, 0.1, spec.seed);
        CHECK(v0.data == f.data);
        const DenseArray v1 = crop_view(f, "train_0000", 1, 0.1, spec.seed);
        const DenseArray v1b = crop_view(f, "train_0000", 1, 0.1, spec.seed);
        CHECK(v1.data == v1b.data);
        CHECK(v1.data != f.data);
    }
}
