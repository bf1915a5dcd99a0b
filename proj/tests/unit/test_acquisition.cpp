#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "lazygp/acquisition.hpp"
#include "lazygp/gp.hpp"
#include "support/oracles.hpp"

using lazygp::GpState;
using lazygp::KernelParams;
using lazygp::Point;
using lazygp::Suggestion;

namespace {

double ei_of_state(const GpState& state, const Point& x, double xi) {
    const lazygp::Posterior post = lazygp::posterior(state, x);
    return lazygp::expected_improvement(post.mean, std::sqrt(post.variance),
                                        state.best_observed(), xi);
}

} // namespace

TEST_CASE("expected improvement is zero at zero deviation", "[acquisition]") {
    CHECK(lazygp::expected_improvement(10.0, 0.0, 0.0, 0.0) == 0.0);
    CHECK(lazygp::expected_improvement(-10.0, 0.0, 0.0, 0.0) == 0.0);
}

TEST_CASE("expected improvement collapses to s*phi(0) at gamma = 0", "[acquisition]") {
    for (const double s : {0.1, 1.0, 7.5}) {
        const double ei = lazygp::expected_improvement(1.0 + 0.01 + 0.0, s, 1.0, 0.01);
        CHECK(ei == Catch::Approx(s * 0.39894228040143268).margin(1e-12));
    }
}

TEST_CASE("expected improvement agrees with Monte Carlo", "[acquisition]") {
    std::mt19937_64 rng(71);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double f_best = -2.0, xi = 0.01;
    for (const double z : {-1.5, 0.5}) {
        for (const double sigma : {0.3, 3.0}) {
            const double mean = f_best + xi + z * sigma;
            const std::size_t draws = 200'000;
            double sum = 0.0, sum_sq = 0.0;
            for (std::size_t i = 0; i < draws; ++i) {
                const double improvement =
                    std::max(mean + sigma * gauss(rng) - f_best - xi, 0.0);
                sum += improvement;
                sum_sq += improvement * improvement;
            }
            const double mc = sum / draws;
            const double se =
                std::sqrt(std::max(sum_sq / draws - mc * mc, 0.0) / static_cast<double>(draws));
            const double analytic = lazygp::expected_improvement(mean, sigma, f_best, xi);
            CHECK(std::abs(analytic - mc) <= 3.0 * se);
        }
    }
}

TEST_CASE("expected improvement is monotone in mean and spread", "[acquisition]") {
    std::mt19937_64 rng(73);
    std::uniform_real_distribution<double> uniform(-5.0, 5.0);
    const double f_best = 0.4, xi = 0.01;
    for (int rep = 0; rep < 100; ++rep) {
        const double sigma = std::abs(uniform(rng)) + 0.1;
        double m1 = uniform(rng), m2 = uniform(rng);
        if (m1 > m2) std::swap(m1, m2);
        CHECK(lazygp::expected_improvement(m1, sigma, f_best, xi) <=
              lazygp::expected_improvement(m2, sigma, f_best, xi) + 1e-15);

        const double mean = f_best + xi - std::abs(uniform(rng)); // mean <= f_best + xi
        double s1 = std::abs(uniform(rng)), s2 = std::abs(uniform(rng));
        if (s1 > s2) std::swap(s1, s2);
        CHECK(lazygp::expected_improvement(mean, s1, f_best, xi) <=
              lazygp::expected_improvement(mean, s2, f_best, xi) + 1e-15);
    }
}

TEST_CASE("the log-scale tail evaluation stays faithful", "[acquisition]") {
    using lazygp::detail::log_expected_improvement;
    // Frozen against a 50-digit evaluation of log(gamma Phi(z) + sigma phi(z)).
    struct Row {
        double z, expected;
    };
    for (const Row& row : {Row{-8.0, -37.12236426169263}, Row{-10.0, -55.55312203612235},
                           Row{-50.0, -1258.744182868461}, Row{-1000.0, -500014.73445209116}}) {
        const double got = log_expected_improvement(row.z, 1.0, 0.0, 0.0);
        CHECK(got == Catch::Approx(row.expected).margin(1e-9));
    }
    // Where the closed form is representable the two routes agree.
    for (const double z : {-3.0, -1.0, 0.0, 2.0}) {
        const double ei = lazygp::expected_improvement(z * 2.0, 2.0, 0.0, 0.0);
        CHECK(log_expected_improvement(z * 2.0, 2.0, 0.0, 0.0) ==
              Catch::Approx(std::log(ei)).margin(1e-12));
    }
    // Zero spread carries no signal at all.
    CHECK(std::isinf(log_expected_improvement(1.0, 0.0, 0.0, 0.0)));
    // Strictly increasing in mean arbitrarily deep in the tail.
    double previous = log_expected_improvement(-90.0, 1.0, 0.0, 0.01);
    for (double mean = -80.0; mean <= -40.0; mean += 10.0) {
        const double value = log_expected_improvement(mean, 1.0, 0.0, 0.01);
        CHECK(value > previous);
        previous = value;
    }
}

TEST_CASE("expected improvement is translation equivariant", "[acquisition]") {
    std::mt19937_64 rng(79);
    std::uniform_real_distribution<double> uniform(-3.0, 3.0);
    for (int rep = 0; rep < 100; ++rep) {
        const double mean = uniform(rng), sigma = std::abs(uniform(rng)) + 0.05;
        const double f_best = uniform(rng), xi = std::abs(uniform(rng));
        const double shift = 10.0 * uniform(rng);
        const double base = lazygp::expected_improvement(mean, sigma, f_best, xi);
        const double shifted = lazygp::expected_improvement(mean + shift, sigma, f_best + shift, xi);
        CHECK(shifted == Catch::Approx(base).margin(1e-9));
    }
}

TEST_CASE("a lone center observation pushes the suggestion outward", "[acquisition]") {
    const GpState state = lazygp::fit({Point{0.5}}, {1.0}, KernelParams{});
    std::mt19937_64 rng(83);
    const Suggestion s = lazygp::suggest_one(state, 10, 0.01, rng);
    CHECK(std::abs(s.x[0] - 0.5) > 0.05);
    CHECK(s.ei_value > 0.0);
}

TEST_CASE("the ascent never ends below its starting EI", "[acquisition]") {
    std::mt19937_64 rng(89);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto X = oracles::random_points(8, 2, rng);
    std::vector<double> y(8);
    for (double& v : y) v = gauss(rng);
    const GpState state = lazygp::fit(X, y, KernelParams{1.0, 0.3, 1e-6});

    const std::uint64_t seed = 1234;
    const std::size_t restarts = 12;
    const double xi = 0.01;

    std::mt19937_64 rng_run(seed);
    const Suggestion s = lazygp::suggest_one(state, restarts, xi, rng_run);

    // Replay the same stream to recover the start points.
    std::mt19937_64 rng_replay(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double best_start_ei = 0.0;
    for (std::size_t r = 0; r < restarts; ++r) {
        Point start(2);
        for (double& v : start) v = unit(rng_replay);
        best_start_ei = std::max(best_start_ei, ei_of_state(state, start, xi));
    }
    CHECK(s.ei_value >= best_start_ei);
}

TEST_CASE("suggestion matches a dense 1-D grid search", "[acquisition]") {
    std::mt19937_64 rng(97);
    const std::vector<Point> X{{0.15}, {0.4}, {0.85}};
    const std::vector<double> y{0.2, 1.0, -0.5};
    const GpState state = lazygp::fit(X, y, KernelParams{1.0, 0.2, 1e-6});

    double grid_max = 0.0;
    for (int i = 0; i <= 10'000; ++i)
        grid_max = std::max(grid_max, ei_of_state(state, Point{i / 10'000.0}, 0.01));

    const Suggestion s = lazygp::suggest_one(state, 10, 0.01, rng);
    CHECK(s.ei_value >= grid_max - 1e-3);
}

TEST_CASE("a batch of one is exactly suggest_one", "[acquisition]") {
    std::mt19937_64 rng_a(111), rng_b(111);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::mt19937_64 data_rng(5);
    const auto X = oracles::random_points(6, 2, data_rng);
    std::vector<double> y(6);
    for (double& v : y) v = gauss(data_rng);
    const GpState state = lazygp::fit(X, y, KernelParams{1.0, 0.3, 1e-6});

    const Suggestion one = lazygp::suggest_one(state, 8, 0.01, rng_a);
    const std::vector<Suggestion> batch = lazygp::suggest_batch(state, 1, 8, 0.01, rng_b);
    REQUIRE(batch.size() == 1);
    CHECK(batch[0].x == one.x);
    CHECK(batch[0].ei_value == one.ei_value);
    CHECK(batch[0].start_index == one.start_index);
}

TEST_CASE("batch members keep their dedupe distance and stay sorted", "[acquisition]") {
    std::mt19937_64 rng(113);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::mt19937_64 data_rng(9);
    const auto X = oracles::random_points(10, 2, data_rng);
    std::vector<double> y(10);
    for (double& v : y) v = gauss(data_rng);
    const GpState state = lazygp::fit(X, y, KernelParams{1.0, 0.25, 1e-6});

    const std::vector<Suggestion> batch = lazygp::suggest_batch(state, 5, 40, 0.01, rng);
    REQUIRE(!batch.empty());
    const double delta = lazygp::default_dedupe_distance(2);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        for (double v : batch[i].x) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        CHECK(batch[i].ei_value >= 0.0);
        if (i > 0) CHECK(batch[i - 1].ei_value >= batch[i].ei_value);
        for (std::size_t j = 0; j < i; ++j) {
            double dist_sq = 0.0;
            for (std::size_t k = 0; k < 2; ++k) {
                const double d = batch[i].x[k] - batch[j].x[k];
                dist_sq += d * d;
            }
            CHECK(std::sqrt(dist_sq) >= delta);
        }
    }
}

TEST_CASE("a bimodal 1-D landscape yields both local maxima", "[acquisition]") {
    const std::vector<Point> X{{0.25}, {0.75}};
    const std::vector<double> y{0.8, 1.0};
    const GpState state = lazygp::fit(X, y, KernelParams{1.0, 0.12, 1e-6});

    // Grid-detect local EI maxima, boundary included.
    const int grid_n = 10'000;
    std::vector<double> ei(grid_n + 1);
    for (int i = 0; i <= grid_n; ++i) ei[i] = ei_of_state(state, Point{i / double(grid_n)}, 0.01);
    std::vector<std::pair<double, double>> maxima; // (ei, x)
    for (int i = 0; i <= grid_n; ++i) {
        const bool left_ok = i == 0 || ei[i] > ei[i - 1];
        const bool right_ok = i == grid_n || ei[i] > ei[i + 1];
        if (left_ok && right_ok) maxima.push_back({ei[i], i / double(grid_n)});
    }
    std::sort(maxima.rbegin(), maxima.rend());
    REQUIRE(maxima.size() >= 2);

    std::mt19937_64 rng(127);
    const std::vector<Suggestion> batch = lazygp::suggest_batch(state, 2, 40, 0.01, rng);
    REQUIRE(batch.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        const double got = batch[i].x[0];
        const bool near_some_max = std::abs(got - maxima[0].second) <= 1e-2 ||
                                   std::abs(got - maxima[1].second) <= 1e-2;
        CHECK(near_some_max);
    }
    CHECK(std::abs(batch[0].x[0] - batch[1].x[0]) > 1e-2);
}

TEST_CASE("suggestions are deterministic for a fixed seed", "[acquisition]") {
    std::mt19937_64 data_rng(15);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto X = oracles::random_points(7, 3, data_rng);
    std::vector<double> y(7);
    for (double& v : y) v = gauss(data_rng);
    const GpState state = lazygp::fit(X, y, KernelParams{1.0, 0.4, 1e-6});

    std::mt19937_64 rng_a(999), rng_b(999);
    const auto batch_a = lazygp::suggest_batch(state, 3, 20, 0.01, rng_a);
    const auto batch_b = lazygp::suggest_batch(state, 3, 20, 0.01, rng_b);
    REQUIRE(batch_a.size() == batch_b.size());
    for (std::size_t i = 0; i < batch_a.size(); ++i) {
        CHECK(batch_a[i].x == batch_b[i].x);
        CHECK(batch_a[i].ei_value == batch_b[i].ei_value);
        CHECK(batch_a[i].start_index == batch_b[i].start_index);
    }
}

TEST_CASE("zero acquisition signal everywhere falls back to pure exploration", "[acquisition]") {
    // One noise-free observation with an astronomically long length scale:
    // the covariance rounds to 1 across the whole cube, the posterior spread
    // is exactly zero everywhere and the acquisition carries no signal.
    const GpState state = lazygp::fit({Point{0.5, 0.5}}, {1.0}, KernelParams{1.0, 1e18, 0.0});
    std::mt19937_64 rng(131);
    const std::vector<Suggestion> batch = lazygp::suggest_batch(state, 3, 10, 0.01, rng);
    REQUIRE(batch.size() == 1);
    CHECK(batch[0].start_index == -1);
    CHECK(batch[0].ei_value == 0.0);
    for (double v : batch[0].x) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}
