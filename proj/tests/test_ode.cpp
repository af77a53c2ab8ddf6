#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "citelab/ode.hpp"
#include "citelab/model.hpp"
#include "oracles.hpp"

using namespace citelab;
using Catch::Approx;

namespace {

std::vector<AgingKernel> grid_kernels() {
    return {AgingKernel::lognormal(0.0, 1.0), AgingKernel::exponential(1.0), AgingKernel::uniform(10.0)};
}

}  // namespace

TEST_CASE("right-hand sides", "[ode]") {
    const auto ln = AgingKernel::lognormal(0.0, 1.0);
    for (double dt : {0.0, 0.3, 1.0, 7.0})
        for (double lam : {0.0, 1.0, 9.0}) CHECK(rhs(OdeVariant::CommentC1, 1.0, dt, lam, ln) == 0.0);
    CHECK(rhs(OdeVariant::OriginalS14, 1.0, 1.0, 1.0, ln) == Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
    CHECK(rhs(OdeVariant::OriginalS14, 1.0, 1.0, 1.0, ln) == Approx(0.398942).epsilon(1e-6));
    // pdf = 0.1 on the uniform(10) support
    CHECK(rhs(OdeVariant::CommentC1, 2.0, 4.0, 3.0, AgingKernel::uniform(10.0)) == Approx(0.3));
}

TEST_CASE("dopri5 on a problem with a known solution", "[ode]") {
    // y' = -2 t y, y(0) = 1  =>  y = exp(-t^2)
    const auto grid = uniform_grid(3.0, 61);
    StepStats st;
    const auto y = dopri5([](double t, double v) { return -2.0 * t * v; }, 1.0, grid, 1e-11, &st);
    REQUIRE(y.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(y[i] - std::exp(-grid[i] * grid[i])) < 1e-9);
    CHECK(st.accepted > 0);
}

TEST_CASE("dopri5 reports step-size underflow", "[ode]") {
    // Finite-time blow-up at t = 1.
    const std::vector<double> grid{0.0, 2.0};
    CHECK_THROWS_AS(dopri5([](double, double v) { return v * v; }, 1.0, grid, 1e-10, nullptr, "blowup"),
                    IntegrationError);
    try {
        dopri5([](double, double v) { return v * v; }, 1.0, grid, 1e-10, nullptr, "blowup");
    } catch (const IntegrationError& e) {
        CHECK(std::string(e.what()).find("blowup") != std::string::npos);
        CHECK(std::string(e.what()).find("dt =") != std::string::npos);
    }
}

TEST_CASE("integrate validates its inputs", "[ode]") {
    const auto k = AgingKernel::exponential(1.0);
    CHECK_THROWS_AS(integrate(OdeVariant::CommentC1, 1.0, k, 0.0, 1e-8), ValidationError);
    CHECK_THROWS_AS(integrate(OdeVariant::CommentC1, 1.0, k, 1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(integrate(OdeVariant::CommentC1, -1.0, k, 1.0, 1e-8), DomainError);
    CHECK_THROWS_AS(integrate(OdeVariant::CommentC1, 1.0, k, 1.0, 1e-8, {0.0, 0.5, 0.5, 1.0}), ValidationError);
    CHECK_THROWS_AS(integrate(OdeVariant::CommentC1, 1.0, k, 1.0, 1e-8, {0.1, 1.0}), ValidationError);
}

TEST_CASE("the corrected equation stays at f = 1", "[ode][fixed-point]") {
    const auto tr = integrate(OdeVariant::CommentC1, 5.0, AgingKernel::lognormal(0.0, 1.0), 100.0, 1e-10);
    CHECK(tr.times.size() == tr.values.size());
    CHECK(tr.values.front() == 1.0);
    for (double f : tr.values) CHECK(std::abs(f - 1.0) <= 1e-8);
    const auto err = compare_closed_form(tr);
    CHECK(err.max_abs <= 1e-8);

    // Every lambda in [0, 10] and every kernel family.
    for (const auto& k : grid_kernels()) {
        for (double lam = 0.0; lam <= 10.0; lam += 0.5) {
            const auto rep = verify_fixed_point(lam, k, 50.0, 1e-8, 3);
            CHECK(rep.max_abs_deviation <= 100.0 * 1e-8);
            CHECK(rep.verdict);
            CHECK(std::abs(rep.final_implied_citations) <= 1e-6);
        }
    }
}

TEST_CASE("verify_fixed_point examples", "[ode][fixed-point]") {
    const auto a = verify_fixed_point(1.0, AgingKernel::lognormal(0.0, 1.0), 50.0, 1e-10);
    CHECK(a.max_abs_deviation <= 1e-8);
    CHECK(a.verdict);
    const auto b = verify_fixed_point(0.0, AgingKernel::exponential(1.0), 50.0, 1e-10);
    CHECK(b.max_abs_deviation == 0.0);
    const auto c = verify_fixed_point(10.0, AgingKernel::uniform(5.0), 20.0, 1e-10);
    CHECK(c.verdict);
}

TEST_CASE("Picard iteration from f = 1 reproduces f = 1 for the corrected equation", "[ode][fixed-point]") {
    const auto k = AgingKernel::uniform(5.0);
    const double lam = 10.0;
    const auto picard = oracle::picard(
        [&](double t, double f) { return lam * (f - 1.0) * k.pdf(t); }, 20.0, 2000, 5);
    for (double f : picard) CHECK(f == 1.0);
    const auto tr = integrate(OdeVariant::CommentC1, lam, k, 20.0, 1e-10, uniform_grid(20.0, 2001));
    for (std::size_t i = 0; i < picard.size(); ++i) CHECK(std::abs(tr.values[i] - picard[i]) <= 1e-8);

    // The same oracle converges to exp(lambda cdf) for the original form,
    // confirming it is not trivially constant.
    const auto smooth = AgingKernel::exponential(1.0);
    const auto grow = oracle::picard(
        [&](double t, double f) { return 1.0 * f * smooth.pdf(t); }, 40.0, 8000, 30);
    CHECK(grow.back() == Approx(std::exp(smooth.cdf(40.0))).epsilon(1e-5));
}

TEST_CASE("original form matches exp(lambda cdf)", "[ode]") {
    const auto ln = AgingKernel::lognormal(0.0, 1.0);
    const std::vector<double> grid{0.0, 0.5, 1.0, 2.0};
    const auto tr = integrate(OdeVariant::OriginalS14, 1.0, ln, 2.0, 1e-10, grid);
    CHECK(tr.values[2] == Approx(std::exp(0.5)).epsilon(1e-8));
    CHECK(tr.values[2] == Approx(1.648721).epsilon(1e-6));

    for (const auto& k : grid_kernels()) {
        const auto flat = integrate(OdeVariant::OriginalS14, 0.0, k, 30.0, 1e-10);
        for (double f : flat.values) CHECK(f == 1.0);
        CHECK(compare_closed_form(flat).max_abs == 0.0);
        CHECK(compare_closed_form(flat).rms == 0.0);
        for (double lam : {0.5, 1.0, 2.0}) {
            const auto t = integrate(OdeVariant::OriginalS14, lam, k, 100.0, 1e-10);
            CHECK(compare_closed_form(t).max_abs <= 1e-6);
        }
    }
}

TEST_CASE("ODE endpoints close the loop with the closed-form counts", "[ode]") {
    for (const auto& k : grid_kernels()) {
        for (double lam : {0.5, 1.0, 2.0}) {
            const double t_end = k.exhaust_time(1e-14);
            const auto orig = integrate(OdeVariant::OriginalS14, lam, k, t_end, 1e-10);
            CHECK(std::abs(3.0 * (orig.values.back() - 1.0) - ultimate_citations(lam, 3)) <= 1e-6);
            const auto corr = integrate(OdeVariant::CommentC1, lam, k, t_end, 1e-10);
            CHECK(std::abs(3.0 * (corr.values.back() - 1.0)) <= 1e-6);
        }
    }
}

TEST_CASE("tightening the tolerance never worsens the error", "[ode]") {
    for (const auto& k : grid_kernels()) {
        for (double lam : {0.5, 1.0, 2.0, 5.0}) {
            double prev = std::numeric_limits<double>::infinity();
            for (double tol : {1e-6, 1e-8, 1e-10}) {
                const double e = compare_closed_form(integrate(OdeVariant::OriginalS14, lam, k, 100.0, tol)).max_abs;
                CHECK(e <= prev);
                prev = e;
            }
        }
    }
}

TEST_CASE("default horizon exhausts the kernel", "[ode]") {
    CHECK(default_t_end(AgingKernel::exponential(1.0)) == Approx(-std::log(1e-9)));
    CHECK(default_t_end(AgingKernel::uniform(10.0)) == Approx(10.0));
    CHECK(default_t_end(AgingKernel::lognormal(10.0, 2.0)) == 1e4);
}
