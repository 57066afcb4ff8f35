#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msse/rng.hpp"
#include "msse/tensor.hpp"

#include "support/fd_check.hpp"

using namespace msse;

TEST_CASE("new_filled basics") {
    auto z = new_filled(1, 1, 2, 2, 0.0);
    CHECK(z.data == std::vector<double>{0, 0, 0, 0});

    auto s = new_filled(1, 1, 1, 1, 3.5);
    CHECK(s.data.size() == 1);
    CHECK(s.data[0] == 3.5);

    auto ones = new_filled(2, 3, 4, 5, 1.0f);
    CHECK(ones.size() == 120);
    for (float v : ones.data) CHECK(v == 1.0f);

    CHECK_THROWS_AS(Tensor4<float>(0, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(Tensor4<float>(1, 1, -2, 1), std::invalid_argument);
}

TEST_CASE("indexing lays out batch-major then channel, row, col") {
    Tensor4<double> t(2, 3, 4, 5);
    CHECK(t.offset(1, 2, 3, 4) == ((1 * 3 + 2) * 4 + 3) * 5 + 4);
    t.at(1, 2, 3, 4) = 7.0;
    CHECK(t.data[t.offset(1, 2, 3, 4)] == 7.0);
}

TEST_CASE("elementwise ops") {
    Rng rng(11);
    Tensor4<double> x(2, 3, 4, 4);
    fd::fill_uniform(x, rng);
    const Tensor4<double> zeros(2, 3, 4, 4, 0.0);
    const Tensor4<double> ones(2, 3, 4, 4, 1.0);

    CHECK(ew_add(x, zeros).data == x.data);
    CHECK(ew_mul(x, ones).data == x.data);

    Tensor4<double> small(1, 1, 2, 2);
    small.data = {1, 2, 3, 4};
    CHECK(scale(small, 2.0).data == std::vector<double>{2, 4, 6, 8});

    Tensor4<double> other(2, 3, 4, 5);
    CHECK_THROWS_AS(ew_add(x, other), std::invalid_argument);
    CHECK_THROWS_AS(ew_mul(x, other), std::invalid_argument);
}

TEST_CASE("ew_add commutes and scale round-trips") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor4<double> a(1, 2, 3, 3), b(1, 2, 3, 3);
        fd::fill_uniform(a, rng, -5.0, 5.0);
        fd::fill_uniform(b, rng, -5.0, 5.0);
        CHECK(ew_add(a, b).data == ew_add(b, a).data);
        const auto round = scale(scale(a, 2.0), 0.5);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(round.data[i] == doctest::Approx(a.data[i]).epsilon(1e-15));
    }
}

TEST_CASE("concat_channels bands and identity") {
    Rng rng(7);
    Tensor4<float> only(1, 3, 2, 2);
    fd::fill_uniform(only, rng);
    CHECK(concat_channels<float>({&only}).data == only.data);

    Tensor4<float> a(1, 128, 7, 7), b(1, 128, 7, 7);
    fd::fill_uniform(a, rng);
    fd::fill_uniform(b, rng);
    auto cat = concat_channels(a, b);
    CHECK(cat.c == 256);
    CHECK(cat.n == 1);
    CHECK(cat.h == 7);
    CHECK(cat.w == 7);

    CHECK_THROWS_AS(concat_channels<float>({}), std::invalid_argument);
    Tensor4<float> bad(1, 4, 3, 3);
    CHECK_THROWS_AS(concat_channels(a, bad), std::invalid_argument);
}

TEST_CASE("concat then slice recovers every part bit-exactly") {
    Rng rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(3));
        const int h = 1 + static_cast<int>(rng.below(5));
        const int w = 1 + static_cast<int>(rng.below(5));
        std::vector<Tensor4<double>> parts;
        std::vector<const Tensor4<double> *> ptrs;
        for (int i = 0; i < 3; ++i) {
            parts.emplace_back(n, 1 + static_cast<int>(rng.below(6)), h, w);
            fd::fill_uniform(parts.back(), rng);
        }
        for (const auto &p : parts) ptrs.push_back(&p);
        const auto cat = concat_channels(ptrs);
        int c0 = 0;
        for (const auto &p : parts) {
            CHECK(slice_channels(cat, c0, p.c).data == p.data);
            c0 += p.c;
        }
        // part-2's channel 0 sits right after part-1's band
        CHECK(slice_channels(cat, parts[0].c, 1).data == slice_channels(parts[1], 0, 1).data);
    }
}

TEST_CASE("channel_stats mean and max") {
    Tensor4<double> constant(2, 4, 3, 3, 2.5);
    auto s = channel_stats(constant);
    for (double v : s.avg.data) CHECK(v == 2.5);
    for (double v : s.max.data) CHECK(v == 2.5);

    Tensor4<double> two(1, 2, 2, 2, 0.0);
    for (int i = 0; i < 4; ++i) two.plane(0, 1)[i] = 1.0;
    auto s2 = channel_stats(two);
    for (double v : s2.avg.data) CHECK(v == 0.5);
    for (double v : s2.max.data) CHECK(v == 1.0);

    Tensor4<double> single(1, 1, 3, 2);
    Rng rng(3);
    fd::fill_uniform(single, rng);
    auto s3 = channel_stats(single);
    CHECK(s3.avg.data == single.data);
    CHECK(s3.max.data == single.data);
}

TEST_CASE("channel_stats max dominates avg") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        Tensor4<double> x(1 + static_cast<int>(rng.below(2)), 1 + static_cast<int>(rng.below(8)),
                          2 + static_cast<int>(rng.below(4)), 2 + static_cast<int>(rng.below(4)));
        fd::fill_uniform(x, rng, -10.0, 10.0);
        auto s = channel_stats(x);
        for (std::size_t i = 0; i < s.avg.size(); ++i) CHECK(s.max.data[i] >= s.avg.data[i]);
    }
}
