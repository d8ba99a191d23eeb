#include <doctest.h>

#include <cmath>

#include "scalefree/errors.hpp"
#include "scalefree/rng.hpp"
#include "scalefree/scale_clip.hpp"

using namespace scalefree;

TEST_SUITE("scale-clip") {
    TEST_CASE("clip clamps into the threshold") {
        const ClipState c{2.0, 1};
        CHECK(clip(5.0, c) == 2.0);
        CHECK(clip(-5.0, c) == -2.0);
        CHECK(clip(1.5, c) == 1.5);
        CHECK(clip(7.0, ClipState{0.0, 1}) == 0.0);
    }

    TEST_CASE("threshold doubles the exceeding magnitude") {
        CHECK(update_threshold(3.0, {2.0, 1}).threshold == 6.0);
        CHECK(update_threshold(-3.0, {2.0, 1}).threshold == 6.0);
        CHECK(update_threshold(1.0, {2.0, 1}).threshold == 2.0);
        CHECK(update_threshold(2.0, {2.0, 1}).threshold == 2.0);
        CHECK(update_threshold(0.0, {0.0, 1}).threshold == 0.0);
        CHECK(update_threshold(0.0, {0.0, 4}).round == 5);
    }

    TEST_CASE("threshold is monotone and bounds past losses") {
        RandomStream rng(3, StreamKey::adversary);
        ClipState c;
        double largest = 0.0;
        for (int t = 0; t < 1000; ++t) {
            const double loss = (rng.uniform() - 0.5) * std::pow(10.0, 6.0 * rng.uniform());
            const ClipState next = update_threshold(loss, c);
            CHECK(next.threshold >= c.threshold);
            largest = std::max(largest, std::abs(loss));
            CHECK(next.threshold >= largest);
            CHECK(next.threshold <= 2.0 * largest);
            c = next;
        }
    }

    TEST_CASE("importance weighted estimator") {
        auto e = estimate_iw(1.0, {2.0, 1}, 0, 0.5, 2);
        CHECK(e == std::vector<double>{6.0, 0.0});
        e = estimate_iw(-2.0, {2.0, 1}, 1, 0.25, 2);
        CHECK(e == std::vector<double>{0.0, 0.0});
        e = estimate_iw(0.0, {0.0, 1}, 1, 0.3, 3);
        CHECK(e == std::vector<double>{0.0, 0.0, 0.0});
        CHECK_THROWS_AS(estimate_iw(1.0, {2.0, 1}, 0, 0.0, 2), InvalidInput);
        CHECK_THROWS_AS(estimate_iw(1.0, {2.0, 1}, 0, -0.1, 2), InvalidInput);
        CHECK_THROWS_AS(estimate_iw(1.0, {2.0, 1}, 2, 0.5, 2), InvalidInput);
    }

    TEST_CASE("implicit exploration estimator") {
        auto e = estimate_ix(1.0, {2.0, 1}, 0, 0.5, 0.1, 2);
        CHECK(e[0] == doctest::Approx(5.0).epsilon(1e-15));
        e = estimate_ix(2.0, {2.0, 1}, 1, 0.1, 0.4, 2);
        CHECK(e[1] == doctest::Approx(8.0).epsilon(1e-15));
        CHECK(e[0] == 0.0);
        CHECK_THROWS_AS(estimate_ix(1.0, {2.0, 1}, 0, 0.5, -0.1, 2), InvalidInput);
        CHECK(estimate_ix(0.7, {2.0, 1}, 1, 0.3, 0.0, 3) == estimate_iw(0.7, {2.0, 1}, 1, 0.3, 3));
    }

    TEST_CASE("estimator is unbiased for the offset loss") {
        RandomStream rng(5, StreamKey::instance);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 2 + trial % 6;
            std::vector<double> q(n);
            double total = 0.0;
            for (auto& v : q) total += v = 0.01 + rng.uniform();
            for (auto& v : q) v /= total;
            const ClipState c{10.0 * rng.uniform(), 1};
            std::vector<double> clipped(n);
            for (auto& v : clipped) v = clip((rng.uniform() - 0.5) * 30.0, c);
            std::vector<double> mean(n, 0.0);
            for (std::size_t k = 0; k < n; ++k) {
                auto e = estimate_iw(clipped[k], c, k, q[k], n);
                for (std::size_t j = 0; j < n; ++j) mean[j] += q[k] * e[j];
            }
            for (std::size_t j = 0; j < n; ++j) CHECK(mean[j] == doctest::Approx(clipped[j] + c.threshold).epsilon(1e-12));
        }
    }

    TEST_CASE("SCB schedule") {
        auto r = schedule_scb({2.0, 4}, 4);
        // 1 / (2 * 2 * sqrt 4)
        CHECK(r.eta.value() == doctest::Approx(0.125).epsilon(1e-15));
        CHECK(r.beta == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK(schedule_scb({0.0, 4}, 4).eta.is_unbounded());
        // round 1: beta = n / (2n + sqrt n)
        CHECK(schedule_scb({0.0, 1}, 4).beta == doctest::Approx(4.0 / 10.0));
    }

    TEST_CASE("SCB-IX schedule") {
        auto r = schedule_scbix({1.0, 4}, 2);
        CHECK(r.eta.value() == doctest::Approx(std::sqrt(std::log(2.0) / 8.0)).epsilon(1e-15));
        CHECK(r.eta.value() == doctest::Approx(0.2944).epsilon(1e-4));
        CHECK(r.beta == doctest::Approx(std::sqrt(2 * std::log(2.0) / (2 * std::log(2.0) + 4))).epsilon(1e-15));
        CHECK(r.beta == doctest::Approx(0.5073).epsilon(1e-4));
        CHECK(r.gamma == doctest::Approx(r.eta.value() * 1.0 / 2.0).epsilon(1e-15));
        auto zero = schedule_scbix({0.0, 4}, 2);
        CHECK(zero.eta.is_unbounded());
        CHECK(zero.gamma == 0.0);
        for (double c : {1e-3, 0.7, 5.0, 1e6}) {
            auto s = schedule_scbix({c, 9}, 3);
            CHECK(s.gamma == doctest::Approx(s.eta.value() * c / 2.0).epsilon(1e-14));
        }
    }
}
