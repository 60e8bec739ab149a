#include <doctest.h>

#include "tadkit/geometry.hpp"
#include "tadkit/prng.hpp"
#include "tadkit/types.hpp"

using namespace tadkit;

TEST_CASE("tiou basic values") {
    CHECK(tiou({0, 10}, {0, 10}) == doctest::Approx(1.0));
    CHECK(tiou({0, 10}, {20, 30}) == doctest::Approx(0.0));
    CHECK(tiou({0, 10}, {5, 15}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("interval construction rejects empty and inverted segments") {
    CHECK_THROWS_AS(Interval(3.0, 3.0), DataError);
    CHECK_THROWS_AS(Interval(5.0, 2.0), DataError);
}

TEST_CASE("enclosing segment") {
    CHECK(enclosing({0, 2}, {2, 4}) == Interval(0, 4));
    CHECK(enclosing({1, 3}, {0, 4}) == Interval(0, 4));
    CHECK(enclosing({0, 1}, {10, 11}) == Interval(0, 11));
}

TEST_CASE("tiou symmetry, range and identity over random pairs") {
    Prng rng(11);
    for (int n = 0; n < 500; ++n) {
        const double a0 = rng.uniform(0, 50), a1 = a0 + rng.uniform(0.01, 20);
        const double b0 = rng.uniform(0, 50), b1 = b0 + rng.uniform(0.01, 20);
        Interval a(a0, a1), b(b0, b1);
        const double t = tiou(a, b);
        CHECK(t == doctest::Approx(tiou(b, a)).epsilon(1e-15));
        CHECK(t >= 0.0);
        CHECK(t <= 1.0);
        if (t == 1.0) CHECK(a == b);
        CHECK(tiou(a, a) == doctest::Approx(1.0));
    }
}

TEST_CASE("tiou invariant under common shift and positive scale") {
    Prng rng(12);
    for (int n = 0; n < 200; ++n) {
        const double a0 = rng.uniform(0, 50), a1 = a0 + rng.uniform(0.01, 20);
        const double b0 = rng.uniform(0, 50), b1 = b0 + rng.uniform(0.01, 20);
        const double shift = rng.uniform(0, 100), scale = rng.uniform(0.1, 10);
        Interval a(a0, a1), b(b0, b1);
        Interval as(a0 * scale + shift, a1 * scale + shift);
        Interval bs(b0 * scale + shift, b1 * scale + shift);
        CHECK(std::abs(tiou(a, b) - tiou(as, bs)) < 1e-12);
    }
}

TEST_CASE("tiou_matrix matches the scalar op element-wise") {
    SUBCASE("trivial") {
        DenseArray m = tiou_matrix({{0, 10}}, {{0, 10}, {20, 30}});
        REQUIRE(m.shape == std::vector<size_t>{1, 2});
        CHECK(m.data[0] == doctest::Approx(1.0));
        CHECK(m.data[1] == doctest::Approx(0.0));
    }
    SUBCASE("empty input") {
        DenseArray m = tiou_matrix({}, {{0, 10}});
        CHECK(m.shape == std::vector<size_t>{0, 1});
        CHECK(m.data.empty());
    }
    SUBCASE("random 5x7 equals loop oracle") {
        Prng rng(13);
        std::vector<Interval> as, bs;
        for (int i = 0; i < 5; ++i) {
            const double s = rng.uniform(0, 30);
            as.emplace_back(s, s + rng.uniform(0.1, 10));
        }
        for (int j = 0; j < 7; ++j) {
            const double s = rng.uniform(0, 30);
            bs.emplace_back(s, s + rng.uniform(0.1, 10));
        }
        DenseArray m = tiou_matrix(as, bs);
        for (size_t i = 0; i < as.size(); ++i) {
            for (size_t j = 0; j < bs.size(); ++j) {
                CHECK(m.data[i * bs.size() + j] == doctest::Approx(tiou(as[i], bs[j])));
            }
        }
    }
}

TEST_CASE("dense array shape/data invariant") {
    CHECK_THROWS_AS(DenseArray({2, 3}, std::vector<double>(5)), DataError);
    DenseArray ok({2, 3}, std::vector<double>(6));
    CHECK(ok.element_count() == 6);
}

TEST_CASE("detection score range enforced") {
    CHECK_THROWS_AS(Detection(Interval(0, 1), 0, 1.5), DataError);
    CHECK_NOTHROW(Detection(Interval(0, 1), 0, 0.5));
}

TEST_CASE("video annotation validation") {
    VideoAnnotation v;
    v.video_id = "v";
    v.duration = 10.0;
    v.fps = 4.0;
    v.instances.push_back(ActionInstance(Interval(2, 12), 0));
    CHECK_THROWS_AS(v.validate(5), DataError);
    v.instances[0] = ActionInstance(Interval(2, 8), 7);
    CHECK_THROWS_AS(v.validate(5), DataError);
    v.instances[0] = ActionInstance(Interval(2, 8), 4);
    CHECK_NOTHROW(v.validate(5));
}
