#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "shapefit/datagen.hpp"
#include "test_util.hpp"

using namespace shapefit;
using testutil::Vec;

namespace {

double sd(const Vec& v) {
    const double m = testutil::sum(v) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v)
        s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Two-sided Kolmogorov-Smirnov statistic against Uniform(0, 1).
double ks_uniform(Vec v) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        d = std::max({d, (i + 1) / n - v[i], v[i] - i / n});
    return d;
}

}  // namespace

TEST_SUITE("datagen") {

TEST_CASE("scenario functions have the advertised structure") {
    const auto s1 = Scenario::make(1);
    for (const auto& f : s1.functions)
        CHECK(f.is_piecewise_constant());
    const auto s2 = Scenario::make(2);
    for (const auto& f : s2.functions)
        CHECK(f.is_smooth());
    const auto s3 = Scenario::make(3);
    CHECK(s3.functions[1].is_smooth());
    for (std::size_t j : {0, 2, 3})
        CHECK(s3.functions[j].is_piecewise_linear());
    CHECK_THROWS_AS(Scenario::make(4), std::invalid_argument);
}

TEST_CASE("scenario functions are centered on the domain") {
    for (int id = 1; id <= 3; ++id) {
        for (const auto& f : Scenario::make(id).functions) {
            // Composite Simpson rule, independent of the library's midpoint rule.
            const int cells = 100000;
            const double h = (kDomainHigh - kDomainLow) / cells;
            double s = f(kDomainLow) + f(kDomainHigh);
            for (int i = 1; i < cells; ++i)
                s += (i % 2 ? 4.0 : 2.0) * f(kDomainLow + i * h);
            const double mean = s * h / 3.0 / (kDomainHigh - kDomainLow);
            CHECK(std::abs(mean) <= 1e-3);
        }
    }
}

TEST_CASE("generation is deterministic and noise-free at infinite snr") {
    const auto sc = Scenario::make(2);
    SimConfig cfg;
    cfg.n = 50;
    cfg.p = 10;
    cfg.seed = 99;
    const auto a = generate(sc, cfg);
    const auto b = generate(sc, cfg);
    CHECK(a.data == b.data);
    cfg.seed = 100;
    CHECK_FALSE(generate(sc, cfg).data == a.data);

    cfg.snr = std::numeric_limits<double>::infinity();
    const auto clean = generate(sc, cfg);
    CHECK(clean.sigma == 0.0);
    CHECK(clean.data.y == clean.signal);
    CHECK(clean.support == std::vector<std::size_t>{0, 1, 2, 3});
    for (double v : clean.data.X.data())
        CHECK((v >= kDomainLow && v <= kDomainHigh));
}

TEST_CASE("noise level follows the signal-to-noise ratio") {
    for (int id = 1; id <= 3; ++id) {
        const auto sc = Scenario::make(id);
        SimConfig cfg;
        cfg.n = 100000;
        cfg.p = 4;
        cfg.snr = 3.0;
        cfg.seed = 5;
        const auto sim = generate(sc, cfg);
        Vec noise(cfg.n);
        for (std::size_t i = 0; i < cfg.n; ++i)
            noise[i] = sim.data.y[i] - sim.signal[i];
        CHECK(sd(noise) * cfg.snr / sc.signal_sd() == doctest::Approx(1.0).epsilon(0.05));
        CHECK(sd(sim.signal) == doctest::Approx(sc.signal_sd()).epsilon(0.05));
    }
}

TEST_CASE("response mean is pure noise") {
    const auto sc = Scenario::make(3);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SimConfig cfg;
        cfg.n = 400;
        cfg.p = 4;
        cfg.seed = seed;
        const auto sim = generate(sc, cfg);
        const double mean = testutil::sum(sim.data.y) / static_cast<double>(cfg.n);
        // Signal variance adds to the noise in the sample mean.
        const double spread = std::sqrt(sim.sigma * sim.sigma + sc.signal_sd() * sc.signal_sd());
        CHECK(std::abs(mean) <= 4.0 * spread / std::sqrt(static_cast<double>(cfg.n)));
    }
}

TEST_CASE("invalid simulation settings") {
    const auto sc = Scenario::make(1);
    SimConfig cfg;
    cfg.p = 3;
    CHECK_THROWS_AS(generate(sc, cfg), std::invalid_argument);
    cfg.p = 4;
    cfg.n = 1;
    CHECK_THROWS_AS(generate(sc, cfg), std::invalid_argument);
    cfg.n = 10;
    cfg.snr = 0.0;
    CHECK_THROWS_AS(generate(sc, cfg), std::invalid_argument);
}

TEST_CASE("splits are independent draws") {
    SimConfig cfg;
    cfg.n = 30;
    cfg.p = 6;
    cfg.seed = 3;
    const auto s = generate_splits(Scenario::make(1), cfg);
    CHECK_FALSE(s.train.data.X == s.validation.data.X);
    CHECK_FALSE(s.validation.data.X == s.test.data.X);
    CHECK(s.train.data.n() == 30);
    CHECK(s.test.data.p() == 6);
    CHECK(derive_seed(3, 0) != derive_seed(3, 1));
    CHECK(derive_seed(3, 0) == derive_seed(3, 0));
}

TEST_CASE("spurious augmentation") {
    std::mt19937_64 rng(60);
    Dataset d = testutil::toy_dataset(rng, 10000, 3);
    const auto same = augment_spurious(d, 3, 1);
    CHECK(same.p() == 3);
    for (std::size_t j = 0; j < 3; ++j) {
        const auto col = same.X.col(j);
        CHECK(*std::min_element(col.begin(), col.end()) == 0.0);
        CHECK(*std::max_element(col.begin(), col.end()) == 1.0);
    }
    CHECK(same.y == d.y);

    const auto aug = augment_spurious(d, 8, 2);
    CHECK(aug.p() == 8);
    CHECK(aug.names.size() == 8);
    for (std::size_t j = 3; j < 8; ++j) {
        const auto col = aug.X.col(j);
        // 1% critical value of the KS statistic is about 1.63 / sqrt(n).
        CHECK(ks_uniform(Vec(col.begin(), col.end())) <= 1.63 / std::sqrt(10000.0));
    }
    CHECK(augment_spurious(d, 8, 2) == aug);
    CHECK_THROWS_AS(augment_spurious(d, 2, 0), std::invalid_argument);

    Dataset flat = d;
    for (double& v : flat.X.col(1))
        v = 4.0;
    for (double v : augment_spurious(flat, 3, 0).X.col(1))
        CHECK(v == 0.0);
}

}  // TEST_SUITE
