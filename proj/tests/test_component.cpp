#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "shapefit/component.hpp"
#include "shapefit/covariate.hpp"
#include "shapefit/prox.hpp"
#include "test_util.hpp"

using namespace shapefit;
using testutil::Vec;

namespace {

InnerOptions tight() {
    InnerOptions o;
    o.tol = 1e-13;
    o.max_iter = 200000;
    return o;
}

oracle::Mode oracle_mode(ShapeMode m) {
    switch (m) {
    case ShapeMode::unconstrained: return oracle::Mode::none;
    case ShapeMode::isotonic: return oracle::Mode::isotonic;
    case ShapeMode::convex: return oracle::Mode::convex;
    case ShapeMode::convex_increasing: return oracle::Mode::convex_increasing;
    case ShapeMode::dc: return oracle::Mode::dc;
    case ShapeMode::approx_convex: return oracle::Mode::ac;
    case ShapeMode::tv: return oracle::Mode::tv;
    }
    return oracle::Mode::none;
}

ShapeSpec random_spec(ShapeMode mode, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.5);
    ShapeSpec s;
    s.mode = mode;
    s.lambda_d = u(rng);
    s.lambda_t = u(rng);
    s.lambda_s = 0.0;
    return s;
}

// Dense A (m x m) of the slope parameterization.
Eigen::MatrixXd dense_A(const Vec& gaps) {
    const std::size_t m = gaps.size() + 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        A(i, 0) = 1.0;
        for (std::size_t k = 0; k < i; ++k)
            A(i, k + 1) = gaps[k];
    }
    return A;
}

double inner_objective(const Vec& z, const Vec& r, const Vec& gaps, const ShapeSpec& spec) {
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        s += 0.5 * (z[i] - r[i]) * (z[i] - r[i]);
    return s + shape_penalty(z, gaps, spec);
}

// FISTA stops on relative objective change, which pins the iterate down to
// roughly the square root of the objective tolerance.
double tol_for(ShapeMode mode) {
    ShapeSpec s;
    s.mode = mode;
    return s.uses_slopes() ? 1e-5 : 1e-8;
}

// Unsorted covariate with spacing bounded away from zero; with `ties`, values
// repeat.
Vec spaced_covariate(std::mt19937_64& rng, std::size_t n, bool ties) {
    const std::size_t distinct = ties ? 1 + rng() % n : n;
    const Vec levels = testutil::cumsum_from_zero(testutil::random_gaps(rng, distinct - 1));
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = i < distinct ? levels[i] : levels[rng() % distinct];
    std::shuffle(x.begin(), x.end(), rng);
    return x;
}

const ShapeMode kAllModes[] = {ShapeMode::unconstrained, ShapeMode::isotonic, ShapeMode::convex,
                               ShapeMode::convex_increasing, ShapeMode::dc,
                               ShapeMode::approx_convex, ShapeMode::tv};

}  // namespace

TEST_SUITE("component") {

TEST_CASE("dc and ac seminorm examples") {
    const Vec gaps{1, 1};
    CHECK(dc_seminorm(Vec{0, 0, 1}, gaps) == doctest::Approx(1.0));
    CHECK(dc_seminorm(Vec{1, 0, 1}, gaps) == doctest::Approx(2.0));
    CHECK(ac_seminorm(Vec{0, 1, 0}, gaps) == doctest::Approx(2.0));
    CHECK(ac_seminorm(Vec{1, 0, 1}, gaps) == 0.0);
    CHECK(dc_seminorm(Vec{3, 7}, Vec{2}) == 0.0);
    CHECK(dc_seminorm(Vec{3}, Vec{}) == 0.0);
    CHECK_THROWS_AS(dc_seminorm(Vec{0, 1, 2}, Vec{1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(ac_seminorm(Vec{0, 1, 2}, Vec{1, -1}), std::invalid_argument);

    std::mt19937_64 rng(20);
    for (int t = 0; t < 100; ++t) {
        const std::size_t m = 2 + rng() % 20;
        const Vec gaps_r = testutil::random_gaps(rng, m - 1);
        const Vec x = testutil::cumsum_from_zero(gaps_r);
        const double a = std::normal_distribution<double>()(rng);
        const double b = std::normal_distribution<double>()(rng);
        Vec affine(m), convex(m);
        for (std::size_t i = 0; i < m; ++i) {
            affine[i] = a * x[i] + b;
            convex[i] = x[i] * x[i] + a * x[i];
        }
        CHECK(dc_seminorm(affine, gaps_r) <= 1e-9 * (1.0 + std::abs(a)));
        CHECK(ac_seminorm(convex, gaps_r) <= 1e-9);
        const Vec z = testutil::random_vec(rng, m);
        CHECK(ac_seminorm(z, gaps_r) <= dc_seminorm(z, gaps_r) + 1e-12);
    }
}

TEST_CASE("apply_A and its adjoint") {
    const auto z = apply_A(SlopeParam{1.0, {1.0, 2.0}}, Vec{1, 1});
    CHECK(z == Vec{1, 2, 4});
    CHECK(apply_A(SlopeParam{0.0, {0.0, 0.0, 0.0}}, Vec{1, 2, 3}) == Vec{0, 0, 0, 0});
    CHECK_THROWS_AS(apply_A(SlopeParam{0.0, {1.0}}, Vec{1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(apply_A_transpose(Vec{1, 2}, Vec{1, 2}), std::invalid_argument);

    std::mt19937_64 rng(21);
    for (int t = 0; t < 100; ++t) {
        const std::size_t m = 1 + rng() % 30;
        const Vec gaps = testutil::random_gaps(rng, m - 1);
        SlopeParam p{std::normal_distribution<double>()(rng), testutil::random_vec(rng, m - 1)};
        const Vec v = testutil::random_vec(rng, m);
        const Vec Ap = apply_A(p, gaps);
        const SlopeParam Atv = apply_A_transpose(v, gaps);
        double lhs = 0.0, rhs = p.intercept * Atv.intercept;
        for (std::size_t i = 0; i < m; ++i)
            lhs += Ap[i] * v[i];
        for (std::size_t k = 0; k + 1 < m; ++k)
            rhs += p.slopes[k] * Atv.slopes[k];
        CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs)));

        // Bijection and the footnote identity dc(A(s, w)) = ||w||_tv.
        const Vec zt = testutil::random_vec(rng, m);
        CHECK(testutil::max_abs_diff(apply_A(slope_param_of(zt, gaps), gaps), zt) <= 1e-12);
        CHECK(std::abs(dc_seminorm(Ap, gaps) - tv_seminorm(p.slopes)) <= 1e-10);
        CHECK(testutil::max_abs_diff(slopes_of(Ap, gaps), p.slopes) <= 1e-10);
    }
}

TEST_CASE("operator norm estimates") {
    CHECK(operator_norm_sq(Vec{}) == doctest::Approx(1.0).epsilon(0.01));
    CHECK(operator_norm_sq(Vec{1.0}) == doctest::Approx((3.0 + std::sqrt(5.0)) / 2.0).epsilon(0.01));

    std::mt19937_64 rng(22);
    for (int t = 0; t < 10; ++t) {
        const std::size_t m = 50;
        const Vec gaps = testutil::random_gaps(rng, m - 1);
        const Vec w = testutil::random_vec(rng, m, 1.0, 3.0);
        const Eigen::MatrixXd A = dense_A(gaps);
        Eigen::VectorXd c(m);
        for (std::size_t i = 0; i < m; ++i)
            c(i) = w[i];
        const Eigen::MatrixXd AtA = A.transpose() * A;
        const Eigen::MatrixXd AtCA = A.transpose() * c.asDiagonal() * A;
        const double plain = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(AtA).eigenvalues().maxCoeff();
        const double weighted =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(AtCA).eigenvalues().maxCoeff();
        CHECK(operator_norm_sq(gaps) == doctest::Approx(plain).epsilon(0.01));
        CHECK(operator_norm_sq(gaps, w) == doctest::Approx(weighted).epsilon(0.01));

        // Slope block with the intercept profiled out.
        const Eigen::MatrixXd B = A.rightCols(m - 1);
        const Eigen::MatrixXd P =
            Eigen::MatrixXd(c.asDiagonal()) - c * c.transpose() / c.sum();
        const Eigen::MatrixXd BPB = B.transpose() * P * B;
        const double prof = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(BPB).eigenvalues().maxCoeff();
        CHECK(profiled_operator_norm_sq(gaps, w) == doctest::Approx(prof).epsilon(0.01));
    }
}

TEST_CASE("inner prox limits in dc mode") {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 30; ++t) {
        const std::size_t m = 3 + rng() % 10;
        const Vec gaps = testutil::random_gaps(rng, m - 1);
        const Vec r = testutil::random_vec(rng, m);
        ShapeSpec spec;
        spec.mode = ShapeMode::dc;
        spec.lambda_d = 0.0;
        CHECK(inner_prox_solve(r, gaps, spec).fit == r);

        const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
        spec.lambda_d = 1e6 * (*hi - *lo);
        const auto res = inner_prox_solve(r, gaps, spec, tight());
        const Vec line = oracle::ls_line(testutil::cumsum_from_zero(gaps), r);
        CHECK(testutil::max_abs_diff(res.fit, line) <= 1e-6);
    }
}

TEST_CASE("inner prox matches the dual oracle in every mode") {
    std::mt19937_64 rng(24);
    for (ShapeMode mode : kAllModes) {
        CAPTURE(to_string(mode));
        for (int t = 0; t < 100; ++t) {
            const std::size_t m = 1 + rng() % 12;
            const Vec gaps = testutil::random_gaps(rng, m - 1);
            const Vec r = testutil::random_vec(rng, m);
            const Vec w = t % 3 == 0 ? testutil::random_vec(rng, m, 1.0, 4.0) : Vec{};
            const ShapeSpec spec = random_spec(mode, rng);
            const auto res = inner_prox_solve(r, gaps, spec, tight(), w);
            CHECK(res.converged);
            const auto rows = oracle::rows_for(oracle_mode(mode), gaps, spec.lambda_d, spec.lambda_t);
            const Vec expect = oracle::solve({r, w, rows});
            REQUIRE(oracle::last_converged);
            CHECK(testutil::max_abs_diff(res.fit, expect) <= tol_for(mode));
        }
    }
}

TEST_CASE("inner prox on ternary vectors") {
    for (std::size_t m = 1; m <= 7; ++m) {
        const Vec gaps(m - 1, 1.0);
        for (const auto& r : testutil::ternary_vectors(m)) {
            for (ShapeMode mode : {ShapeMode::dc, ShapeMode::convex}) {
                ShapeSpec spec;
                spec.mode = mode;
                spec.lambda_d = 0.3;
                const auto res = inner_prox_solve(r, gaps, spec, tight());
                const auto rows = oracle::rows_for(oracle_mode(mode), gaps, 0.3, 0.0);
                REQUIRE(testutil::max_abs_diff(res.fit, oracle::solve({r, {}, rows})) <= 1e-5);
            }
        }
    }
}

TEST_CASE("convex mode output satisfies the slope inequalities") {
    std::mt19937_64 rng(25);
    for (int t = 0; t < 100; ++t) {
        const std::size_t m = 3 + rng() % 40;
        const Vec gaps = testutil::random_gaps(rng, m - 1);
        const Vec r = testutil::random_vec(rng, m, -3, 3);
        for (ShapeMode mode : {ShapeMode::convex, ShapeMode::convex_increasing}) {
            ShapeSpec spec;
            spec.mode = mode;
            const auto res = inner_prox_solve(r, gaps, spec);
            CHECK(shape_violation(res.fit, gaps, mode) <= 1e-7);
        }
    }
}

TEST_CASE("inner objective is non-increasing in the iteration budget") {
    std::mt19937_64 rng(26);
    for (ShapeMode mode : {ShapeMode::dc, ShapeMode::approx_convex, ShapeMode::convex,
                           ShapeMode::convex_increasing}) {
        for (int t = 0; t < 5; ++t) {
            const std::size_t m = 30;
            const Vec gaps = testutil::random_gaps(rng, m - 1);
            const Vec r = testutil::random_vec(rng, m, -3, 3);
            ShapeSpec spec;
            spec.mode = mode;
            spec.lambda_d = 0.2;
            double prev = 1e300;
            for (int k = 1; k <= 60; ++k) {
                InnerOptions o;
                o.tol = 1e-15;
                o.max_iter = k;
                const auto res = inner_prox_solve(r, gaps, spec, o);
                const double f = inner_objective(res.fit, r, gaps, spec);
                CHECK(f <= prev + 1e-12 * (1.0 + std::abs(prev)));
                prev = f;
            }
        }
    }
}

TEST_CASE("non-convergence is flagged, not thrown") {
    std::mt19937_64 rng(27);
    const Vec gaps = testutil::random_gaps(rng, 49);
    const Vec r = testutil::random_vec(rng, 50, -3, 3);
    ShapeSpec spec;
    spec.mode = ShapeMode::dc;
    spec.lambda_d = 0.1;
    InnerOptions o;
    o.tol = 1e-16;
    o.max_iter = 2;
    const auto res = inner_prox_solve(r, gaps, spec, o);
    CHECK_FALSE(res.converged);
    CHECK(res.iterations == 2);
    CHECK(res.fit.size() == 50);
}

TEST_CASE("warm start is reused") {
    std::mt19937_64 rng(28);
    const Vec gaps = testutil::random_gaps(rng, 59);
    const Vec r = testutil::random_vec(rng, 60, -3, 3);
    ShapeSpec spec;
    spec.mode = ShapeMode::dc;
    spec.lambda_d = 0.05;
    InnerState state;
    const auto first = inner_prox_solve(r, gaps, spec, {}, {}, &state);
    CHECK(state.slopes.size() == 59);
    const auto second = inner_prox_solve(r, gaps, spec, {}, {}, &state);
    CHECK(second.iterations <= 2);
    CHECK(testutil::max_abs_diff(first.fit, second.fit) <= 1e-4);
}

TEST_CASE("subproblem examples") {
    std::mt19937_64 rng(29);
    const Vec x = testutil::random_vec(rng, 15);
    const auto cov = SortedCovariate::from_column(x);
    const Vec r = testutil::random_vec(rng, 15);

    ShapeSpec spec;
    spec.mode = ShapeMode::unconstrained;
    const auto res = solve_subproblem(r, cov, spec);
    CHECK(testutil::max_abs_diff(res.z, center(r)) <= 1e-12);

    spec.mode = ShapeMode::dc;
    spec.lambda_d = 0.5;
    const auto base = solve_subproblem(r, cov, spec);
    CHECK(base.inner_norm > 0.0);
    spec.lambda_s = base.inner_norm;
    for (double v : solve_subproblem(r, cov, spec).z)
        CHECK(v == 0.0);
    spec.lambda_s = 1.01 * base.inner_norm;
    for (double v : solve_subproblem(r, cov, spec).z)
        CHECK(v == 0.0);
    spec.lambda_s = 0.5 * base.inner_norm;
    const auto half = solve_subproblem(r, cov, spec);
    CHECK(testutil::norm2(half.z) == doctest::Approx(0.5 * base.inner_norm).epsilon(1e-6));
}

TEST_CASE("composed subproblem equals the joint oracle") {
    std::mt19937_64 rng(30);
    for (ShapeMode mode : kAllModes) {
        CAPTURE(to_string(mode));
        for (int t = 0; t < 50; ++t) {
            const std::size_t n = 2 + rng() % 11;
            // Every fourth instance has ties.
            const Vec x = spaced_covariate(rng, n, t % 4 == 0);
            const auto cov = SortedCovariate::from_column(x);
            const Vec r = testutil::random_vec(rng, n, -2, 2);
            ShapeSpec spec = random_spec(mode, rng);
            spec.lambda_s = std::uniform_real_distribution<double>(0.0, 1.5)(rng);

            ComponentSolver solver(cov);
            Vec z(n);
            const auto status = solver.solve(r, spec, tight(), z);
            CHECK(status.converged);

            Vec r_levels(cov.num_levels());
            cov.level_means(r, r_levels);
            const Vec w = cov.has_ties() ? cov.counts() : Vec{};
            const Vec joint_levels = oracle::joint(oracle_mode(mode), r_levels, cov.gaps(),
                                                   spec.lambda_d, spec.lambda_t, spec.lambda_s, w);
            REQUIRE(oracle::last_converged);
            Vec joint(n);
            cov.scatter(joint_levels, joint);
            CHECK(testutil::max_abs_diff(z, joint) <= tol_for(mode));
        }
    }
}

TEST_CASE("shape penalty of affine fits is zero") {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 50; ++t) {
        const std::size_t m = 3 + rng() % 30;
        const Vec gaps = testutil::random_gaps(rng, m - 1);
        const Vec x = testutil::cumsum_from_zero(gaps);
        Vec z(m);
        const double a = std::normal_distribution<double>(0.0, 5.0)(rng);
        for (std::size_t i = 0; i < m; ++i)
            z[i] = a * x[i] - 1.0;
        ShapeSpec spec;
        spec.mode = ShapeMode::dc;
        spec.lambda_d = 1e3;
        CHECK(shape_penalty(z, gaps, spec) <= 1e-6 * (1.0 + std::abs(a)));
    }
}

TEST_CASE("sorted covariate structure") {
    const Vec x{3.0, 1.0, 2.0, 1.0, 5.0};
    const auto cov = SortedCovariate::from_column(x);
    CHECK(cov.levels() == Vec{1.0, 2.0, 3.0, 5.0});
    CHECK(cov.gaps() == Vec{1.0, 1.0, 2.0});
    CHECK(cov.counts() == Vec{2.0, 1.0, 1.0, 1.0});
    CHECK(cov.has_ties());
    std::vector<std::size_t> perm = cov.perm();
    std::sort(perm.begin(), perm.end());
    CHECK(perm == std::vector<std::size_t>{0, 1, 2, 3, 4});
    CHECK(std::is_sorted(cov.sorted_x().begin(), cov.sorted_x().end()));

    const auto jit = SortedCovariate::from_column(x, TieHandling::jitter);
    CHECK(jit.num_levels() == 5);
    for (double g : jit.gaps())
        CHECK(g > 0.0);
    CHECK_THROWS_AS(SortedCovariate::from_column(Vec{}), std::invalid_argument);
    CHECK_THROWS_AS(SortedCovariate::from_column(Vec{1.0, NAN}), std::invalid_argument);
}

}  // TEST_SUITE
