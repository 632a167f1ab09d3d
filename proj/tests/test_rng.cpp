#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pmatch/rng.hpp"

using namespace pmatch::simulate;

TEST_CASE("philox4x32-10 known-answer vectors") {
    // Published test vectors for the reference algorithm.
    const std::uint32_t ff = 0xFFFFFFFFu;
    CHECK(detail::philox4x32_10({0, 0, 0, 0}, {0, 0})
          == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(detail::philox4x32_10({ff, ff, ff, ff}, {ff, ff})
          == std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(detail::philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                {0xa4093822u, 0x299f31d0u})
          == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("stream output is the word-ordered block sequence") {
    const std::uint64_t seed = 0x1234'5678'9abc'def0ull;
    const std::uint64_t id = 0x0fed'cba9'8765'4321ull;
    PhiloxStream s(seed, id);
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed),
                                           static_cast<std::uint32_t>(seed >> 32)};
    for (std::uint32_t block = 0; block < 3; ++block) {
        const auto expect = detail::philox4x32_10(
            {block, 0, static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)},
            key);
        for (int w = 0; w < 4; ++w) CHECK(s.next_u32() == expect[w]);
    }
}

TEST_CASE("streams are pure functions of (seed, id)") {
    PhiloxStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    bool diff_c = false, diff_d = false;
    for (int i = 0; i < 64; ++i) {
        const auto va = a.next_u64();
        CHECK(va == b.next_u64());
        diff_c |= va != c.next_u64();
        diff_d |= va != d.next_u64();
    }
    CHECK(diff_c);
    CHECK(diff_d);
}

TEST_CASE("next_double covers [0,1) uniformly") {
    PhiloxStream s(5, 0);
    double sum = 0.0, lo = 1.0, hi = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = s.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(lo < 0.001);
    CHECK(hi > 0.999);
}

TEST_CASE("next_uniform respects its bounds") {
    PhiloxStream s(6, 3);
    for (int i = 0; i < 1000; ++i) {
        const double u = s.next_uniform(0.1, 0.9);
        CHECK(u >= 0.1);
        CHECK(u < 0.9);
    }
}

TEST_CASE("next_normal has standard moments") {
    PhiloxStream s(9, 1);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = s.next_normal();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(mean == doctest::Approx(0.0).scale(1.0).epsilon(0.01));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("normal sequence is deterministic including the cached spare") {
    PhiloxStream a(77, 5);
    std::vector<double> first;
    for (int i = 0; i < 7; ++i) first.push_back(a.next_normal());
    PhiloxStream b(77, 5);
    for (int i = 0; i < 7; ++i) CHECK(b.next_normal() == first[i]);
}
