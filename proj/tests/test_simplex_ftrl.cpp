#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "scalefree/errors.hpp"
#include "scalefree/simplex_ftrl.hpp"

using namespace scalefree;

namespace {

double tsallis_objective(const std::vector<double>& L, double eta, const std::vector<double>& p) {
    double lin = 0.0;
    double reg = 4.0 * std::sqrt(static_cast<double>(p.size()));
    for (std::size_t k = 0; k < p.size(); ++k) lin += L[k] * p[k], reg -= 4.0 * std::sqrt(p[k]);
    return lin + reg / eta;
}

double shannon_objective(const std::vector<double>& L, double eta, const std::vector<double>& p) {
    double lin = 0.0;
    double reg = std::log(static_cast<double>(p.size()));
    for (std::size_t k = 0; k < p.size(); ++k) {
        lin += L[k] * p[k];
        if (p[k] > 0.0) reg += p[k] * std::log(p[k]);
    }
    return lin + reg / eta;
}

}  // namespace

TEST_SUITE("simplex-ftrl") {
    TEST_CASE("tsallis zero loss gives uniform") {
        const std::vector<double> L{0, 0, 0, 0};
        auto p = solve_tsallis(L, LearningRate::finite(1.0));
        for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));
    }

    TEST_CASE("tsallis equal losses give uniform") {
        for (double c : {-3.0, 0.0, 7.5, 1e6}) {
            const std::vector<double> L{c, c};
            for (double eta : {1e-3, 1.0, 50.0}) {
                auto p = solve_tsallis(L, LearningRate::finite(eta));
                CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-14));
                CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-14));
            }
        }
    }

    TEST_CASE("tsallis L=(0,10) eta=0.5 matches grid search") {
        const std::vector<double> L{0.0, 10.0};
        auto p = solve_tsallis(L, LearningRate::finite(0.5));
        auto f = [&](const std::vector<double>& x) { return tsallis_objective(L, 0.5, x); };
        auto grid = oracle::grid_argmin(2, 1e-5, f);
        CHECK(std::abs(p[0] - grid[0]) < 2e-5);
        const double golden = oracle::golden_min_2([&](double a) { return f({a, 1.0 - a}); });
        CHECK(std::abs(p[0] - golden) < 1e-8);
    }

    TEST_CASE("shannon closed forms") {
        auto p = solve_shannon(std::vector<double>{0, 0}, LearningRate::finite(1.0));
        CHECK(p[0] == doctest::Approx(0.5));
        p = solve_shannon(std::vector<double>{0, std::log(2.0)}, LearningRate::finite(1.0));
        CHECK(p[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
        CHECK(p[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    }

    TEST_CASE("shannon L=(0,5,10) eta=0.3 against direct softmax and grid") {
        const std::vector<double> L{0, 5, 10};
        auto p = solve_shannon(L, LearningRate::finite(0.3));
        const double z = 1.0 + std::exp(-1.5) + std::exp(-3.0);
        CHECK(p[0] == doctest::Approx(1.0 / z).epsilon(1e-14));
        CHECK(p[1] == doctest::Approx(std::exp(-1.5) / z).epsilon(1e-14));
        CHECK(p[2] == doctest::Approx(std::exp(-3.0) / z).epsilon(1e-14));
        auto grid = oracle::grid_argmin(3, 1e-3, [&](const std::vector<double>& x) { return shannon_objective(L, 0.3, x); });
        for (int k = 0; k < 3; ++k) CHECK(std::abs(p[k] - grid[k]) < 2e-3);
    }

    TEST_CASE("unbounded rate gives uniform") {
        const std::vector<double> L{3, -1, 2};
        for (auto reg : {Regularizer::tsallis_half, Regularizer::shannon}) {
            auto p = solve_ftrl(reg, L, LearningRate::unbounded());
            for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0));
        }
    }

    TEST_CASE("single arm") {
        CHECK(solve_tsallis(std::vector<double>{4.0}, LearningRate::finite(1.0)) == std::vector<double>{1.0});
        CHECK(solve_shannon(std::vector<double>{4.0}, LearningRate::finite(1.0)) == std::vector<double>{1.0});
    }

    TEST_CASE("non-finite inputs are rejected") {
        const double nan = std::nan("");
        const double inf = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(solve_tsallis(std::vector<double>{0.0, nan}, LearningRate::finite(1.0)), InvalidInput);
        CHECK_THROWS_AS(solve_shannon(std::vector<double>{inf, 0.0}, LearningRate::finite(1.0)), InvalidInput);
        CHECK_THROWS_AS(LearningRate::finite(0.0), InvalidInput);
        CHECK_THROWS_AS(LearningRate::finite(inf), InvalidInput);
        CHECK_THROWS_AS(LearningRate::unbounded().value(), InvalidInput);
        CHECK(std::isinf(LearningRate::unbounded().as_double()));
    }

    TEST_CASE("extreme spreads stay on the simplex") {
        RandomStream rng(11, StreamKey::instance);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 2 + trial % 30;
            std::vector<double> L(n);
            for (auto& v : L) v = (rng.uniform() - 0.5) * std::pow(10.0, 12.0 * rng.uniform());
            const double eta = std::pow(10.0, -6.0 + 12.0 * rng.uniform());
            for (auto reg : {Regularizer::tsallis_half, Regularizer::shannon}) {
                auto p = solve_ftrl(reg, L, LearningRate::finite(eta));
                double total = 0.0;
                for (double v : p) {
                    CHECK(v >= 0.0);
                    total += v;
                }
                CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("objective helpers") {
        const std::vector<double> p{0.25, 0.25, 0.25, 0.25};
        CHECK(tsallis_value(p) == doctest::Approx(0.0));
        CHECK(shannon_value(p) == doctest::Approx(0.0));
        const std::vector<double> L{1, 2, 3, 4};
        CHECK(ftrl_objective(Regularizer::shannon, L, 2.0, p) == doctest::Approx(2.5));
    }
}
