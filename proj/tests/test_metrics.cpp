#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "phaseparse/metrics.hpp"
#include "phaseparse/rng.hpp"

using namespace phaseparse;

TEST_CASE("mae_medae: worked example") {
    const auto stats = mae_medae({10.0, 12.0, 20.0}, {11.0, 12.0, 16.0});
    CHECK(std::abs(stats.mae - 5.0 / 3.0) <= 1e-9);
    CHECK(std::abs(stats.medae - 1.0) <= 1e-9);
}

TEST_CASE("mae_medae: exact prediction and even-count convention") {
    const auto zero = mae_medae({3.0, 4.0}, {3.0, 4.0});
    CHECK(zero.mae == 0.0);
    CHECK(zero.medae == 0.0);

    // errors {1, 3}: median is the mean of the two middles
    const auto even = mae_medae({1.0, 3.0}, {0.0, 0.0});
    CHECK(even.medae == 2.0);
    CHECK(even.mae == 2.0);
}

TEST_CASE("median matches a sort-based oracle on random lists") {
    Rng rng(50);
    for (int rep = 0; rep < 300; ++rep) {
        std::vector<double> values(1 + rng.uniform_int(40));
        for (auto& v : values) v = rng.normal(0.0, 10.0);
        auto sorted = values;
        std::sort(sorted.begin(), sorted.end());
        const double expected = sorted.size() % 2 == 1
                                    ? sorted[sorted.size() / 2]
                                    : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
        CHECK(median(values) == expected);
    }
}

TEST_CASE("mae matches a direct mean on random pairs") {
    Rng rng(51);
    for (int rep = 0; rep < 100; ++rep) {
        const size_t n = 1 + rng.uniform_int(20);
        std::vector<double> pred(n), gt(n);
        for (size_t i = 0; i < n; ++i) {
            pred[i] = rng.normal(0.0, 5.0);
            gt[i] = rng.normal(0.0, 5.0);
        }
        double sum = 0.0;
        for (size_t i = 0; i < n; ++i) sum += std::abs(pred[i] - gt[i]);
        CHECK(mae_medae(pred, gt).mae == doctest::Approx(sum / n).epsilon(1e-12));
    }
}

TEST_CASE("mae_medae: input validation") {
    CHECK_THROWS_AS(mae_medae({1.0}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(mae_medae({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(median({}), std::invalid_argument);
}
