#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "citelab/aging.hpp"
#include "citelab/error.hpp"

namespace citelab {

// Single-paper mean-field equations for f, where c = m (f - 1).
enum class OdeVariant {
    CommentC1,    // df/dt = lambda (f - 1) P(dt)
    OriginalS14,  // df/dt = lambda f P(dt), solved by exp(lambda cdf(dt))
};

inline const char* ode_variant_name(OdeVariant v) {
    return v == OdeVariant::CommentC1 ? "comment-c1" : "original-s14";
}

inline double rhs(OdeVariant variant, double f, double dt, double lambda, const AgingKernel& kernel) {
    const double shifted = variant == OdeVariant::CommentC1 ? f - 1.0 : f;
    return lambda * shifted * kernel.pdf(dt);
}

struct StepStats {
    std::size_t accepted = 0;
};

/**
 * Adaptive Dormand-Prince 5(4) integration of a scalar ODE y' = g(t, y),
 * reported at each point of `grid` through the continuous extension.
 * `grid` must be strictly increasing and start at the initial time.
 */
template <class Rhs>
std::vector<double> dopri5(Rhs&& g, double y0, std::span<const double> grid, double tol,
                           StepStats* stats = nullptr, const std::string& label = "ode") {
    namespace odeint = boost::numeric::odeint;
    using Stepper = odeint::runge_kutta_dopri5<double, double, double, double, odeint::vector_space_algebra>;

    std::vector<double> out;
    if (grid.empty()) return out;
    out.reserve(grid.size());
    out.push_back(y0);

    const double t0 = grid.front();
    const double span = grid.back() - t0;
    auto stepper = odeint::make_dense_output(tol, tol, Stepper());
    const auto sys = [&](const double& y, double& dydt, double t) { dydt = g(t, y); };
    stepper.initialize(y0, t0, std::max(1e-6, 1e-3 * span));

    StepStats local;
    auto fail = [&](const std::string& why) {
        return IntegrationError(label + ": " + why + " at dt = " + std::to_string(stepper.current_time()));
    };
    try {
        for (std::size_t next = 1; next < grid.size(); ++next) {
            while (stepper.current_time() < grid[next]) {
                stepper.do_step(sys);
                ++local.accepted;
                const double t = stepper.current_time();
                if (!std::isfinite(stepper.current_state())) throw fail("non-finite solution");
                if (stepper.current_time_step() < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
                    throw fail("step size underflow");
                if (local.accepted > 50'000'000) throw fail("step budget exhausted");
            }
            double y;
            stepper.calc_state(grid[next], y);
            out.push_back(y);
        }
    } catch (const odeint::odeint_error& e) {
        throw fail(e.what());
    }
    if (stats) *stats = local;
    return out;
}

/// Solution of one mean-field equation sampled on a grid of ages.
struct Trajectory {
    std::vector<double> times;
    std::vector<double> values;
    OdeVariant variant = OdeVariant::CommentC1;
    double lambda = 0.0;
    AgingKernel kernel = AgingKernel::lognormal(0.0, 1.0);
    double tol = 0.0;
    StepStats steps;
};

inline std::vector<double> uniform_grid(double t_end, std::size_t points = 1001) {
    std::vector<double> grid(std::max<std::size_t>(points, 2));
    const double n = static_cast<double>(grid.size() - 1);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = t_end * (static_cast<double>(i) / n);
    grid.back() = t_end;
    return grid;
}

// Default integration horizon: the kernel's exhaustion age.
inline double default_t_end(const AgingKernel& kernel) { return kernel.exhaust_time(1e-9, 1e4); }

inline Trajectory integrate(OdeVariant variant, double lambda, const AgingKernel& kernel,
                            double t_end, double tol, std::vector<double> grid = {}) {
    if (!(t_end > 0.0)) throw ValidationError("integrate: t_end must be > 0");
    if (!(tol > 0.0)) throw ValidationError("integrate: tol must be > 0");
    if (!(lambda >= 0.0)) throw DomainError("integrate: negative relative fitness");
    if (grid.empty()) grid = uniform_grid(t_end);
    if (grid.front() != 0.0) throw ValidationError("integrate: grid must start at 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw ValidationError("integrate: grid not strictly increasing");

    Trajectory traj;
    traj.variant = variant;
    traj.lambda = lambda;
    traj.kernel = kernel;
    traj.tol = tol;
    auto g = [&](double t, double f) { return rhs(variant, f, t, lambda, kernel); };
    traj.values = dopri5(g, 1.0, grid, tol, &traj.steps, ode_variant_name(variant));
    traj.times = std::move(grid);
    return traj;
}

// Closed form each variant should reproduce.
inline double closed_form(OdeVariant variant, double lambda, const AgingKernel& kernel, double dt) {
    if (variant == OdeVariant::CommentC1) return 1.0;
    return std::exp(lambda * kernel.cdf(dt));
}

struct ErrorSummary {
    double max_abs = 0.0;
    double rms = 0.0;
};

inline ErrorSummary compare_closed_form(const Trajectory& traj) {
    ErrorSummary s;
    double sq = 0.0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double d =
            std::abs(traj.values[i] - closed_form(traj.variant, traj.lambda, traj.kernel, traj.times[i]));
        s.max_abs = std::max(s.max_abs, d);
        sq += d * d;
    }
    if (!traj.times.empty()) s.rms = std::sqrt(sq / static_cast<double>(traj.times.size()));
    return s;
}

struct FixedPointReport {
    OdeVariant variant = OdeVariant::CommentC1;
    double lambda = 0.0;
    AgingKernel kernel = AgingKernel::lognormal(0.0, 1.0);
    double t_end = 0.0;
    double tol = 0.0;
    int m = 1;
    double max_abs_deviation = 0.0;     // max |f - 1|
    double max_implied_citations = 0.0; // max |m (f - 1)|
    double final_implied_citations = 0.0;
    bool verdict = false;               // deviation <= 100 tol
};

// Integrates the corrected equation from f(0) = 1 and measures how far f
// strays from the stationary solution f = 1.
inline FixedPointReport verify_fixed_point(double lambda, const AgingKernel& kernel, double t_end,
                                           double tol, int m = 1, std::vector<double> grid = {}) {
    const Trajectory traj = integrate(OdeVariant::CommentC1, lambda, kernel, t_end, tol, std::move(grid));
    FixedPointReport r;
    r.lambda = lambda;
    r.kernel = kernel;
    r.t_end = t_end;
    r.tol = tol;
    r.m = m;
    for (double f : traj.values) r.max_abs_deviation = std::max(r.max_abs_deviation, std::abs(f - 1.0));
    r.max_implied_citations = m * r.max_abs_deviation;
    r.final_implied_citations = m * (traj.values.back() - 1.0);
    r.verdict = r.max_abs_deviation <= 100.0 * tol;
    return r;
}

}  // namespace citelab
