#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "citelab/aging.hpp"
#include "citelab/error.hpp"
#include "citelab/model.hpp"

namespace citelab {

// Returned in place of +inf when the likelihood is zero, e.g. lambda = 0 with
// at least one event, or an event outside the kernel support.
inline constexpr double kNllSaturation = 1e300;

/// A history together with the end of its observation window. The window is
/// right-censored at `observation_end` (absolute time; may be +inf).
struct Observed {
    const CitationHistory* history;
    double observation_end;
};

// Sufficient pieces of the pure-birth likelihood for fixed kernel parameters:
// NLL(lambda) = -n log(lambda) - log_terms + lambda * exposure.
struct LikelihoodParts {
    std::size_t events = 0;
    double log_terms = 0.0;  // sum log((c + m) P(dt)) over events
    double exposure = 0.0;   // sum over segments of (c + m) * cdf increment
    bool zero_density = false;
};

inline LikelihoodParts likelihood_parts(const CitationHistory& h, double observation_end,
                                        const AgingKernel& kernel, int m) {
    LikelihoodParts parts;
    h.validate();
    if (!h.event_times.empty() && observation_end < h.event_times.back())
        throw ValidationError("paper '" + h.paper_id + "': observation ends before last citation");
    const double window = observation_end - h.pub_time;
    double prev = 0.0;
    double c = 0.0;
    for (double t : h.event_times) {
        const double dt = t - h.pub_time;
        const double dens = kernel.pdf(dt);
        if (!(dens > 0.0)) parts.zero_density = true;
        else parts.log_terms += std::log((c + m) * dens);
        parts.exposure += (c + m) * kernel.mass(prev, dt);
        prev = dt;
        c += 1.0;
    }
    parts.exposure += (c + m) * (std::isinf(window) ? kernel.survival(prev) : kernel.mass(prev, window));
    parts.events = h.event_times.size();
    return parts;
}

inline LikelihoodParts likelihood_parts(std::span<const Observed> data, const AgingKernel& kernel, int m) {
    LikelihoodParts total;
    for (const auto& o : data) {
        const auto p = likelihood_parts(*o.history, o.observation_end, kernel, m);
        total.events += p.events;
        total.log_terms += p.log_terms;
        total.exposure += p.exposure;
        total.zero_density = total.zero_density || p.zero_density;
    }
    return total;
}

inline double nll_from_parts(const LikelihoodParts& p, double lambda) {
    if (p.events > 0 && (lambda <= 0.0 || p.zero_density)) return kNllSaturation;
    const double event_part = p.events > 0 ? -static_cast<double>(p.events) * std::log(lambda) - p.log_terms : 0.0;
    return std::min(event_part + lambda * p.exposure, kNllSaturation);
}

/**
 * Exact negative log-likelihood of an inhomogeneous pure-birth history with
 * intensity lambda (c(t) + m) P(t - t_pub), right-censored at
 * `observation_end`. The compensator is evaluated in closed form on each
 * interval where c is constant.
 */
inline double neg_log_likelihood(const CitationHistory& h, double lambda, const AgingKernel& kernel,
                                 int m, double observation_end) {
    if (!(lambda >= 0.0)) throw DomainError("neg_log_likelihood: negative relative fitness");
    return nll_from_parts(likelihood_parts(h, observation_end, kernel, m), lambda);
}

inline double neg_log_likelihood(std::span<const Observed> data, double lambda, const AgingKernel& kernel,
                                 int m) {
    if (!(lambda >= 0.0)) throw DomainError("neg_log_likelihood: negative relative fitness");
    return nll_from_parts(likelihood_parts(data, kernel, m), lambda);
}

// dNLL/dlambda = -n / lambda + exposure.
inline double nll_lambda_gradient(std::span<const Observed> data, double lambda, const AgingKernel& kernel,
                                  int m) {
    const auto p = likelihood_parts(data, kernel, m);
    return -static_cast<double>(p.events) / lambda + p.exposure;
}

struct GradientCheck {
    double analytic = 0.0;
    double numeric = 0.0;
    double relative_discrepancy = 0.0;
};

// Analytic lambda-gradient against a central difference with step 1e-6 * lambda.
inline GradientCheck gradient_check(std::span<const Observed> data, double lambda, const AgingKernel& kernel,
                                    int m) {
    if (!(lambda > 0.0)) throw DomainError("gradient_check: lambda must be interior");
    GradientCheck g;
    g.analytic = nll_lambda_gradient(data, lambda, kernel, m);
    const auto parts = likelihood_parts(data, kernel, m);
    const double h = 1e-6 * lambda;
    g.numeric = (nll_from_parts(parts, lambda + h) - nll_from_parts(parts, lambda - h)) / (2.0 * h);
    g.relative_discrepancy =
        std::abs(g.analytic - g.numeric) / std::max({std::abs(g.analytic), std::abs(g.numeric), 1.0});
    return g;
}

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double diameter = 0.0;
};

/// Nelder–Mead simplex minimization with standard coefficients. Converged
/// when the largest vertex distance from the best vertex falls below `xtol`.
template <class F>
SimplexResult nelder_mead(F&& f, std::vector<double> x0, std::vector<double> step, double xtol = 1e-6,
                          std::size_t max_iter = 20000) {
    const std::size_t d = x0.size();
    std::vector<std::vector<double>> pts(d + 1, x0);
    std::vector<double> vals(d + 1);
    for (std::size_t i = 0; i < d; ++i) pts[i + 1][i] += step[i];
    for (std::size_t i = 0; i <= d; ++i) vals[i] = f(pts[i]);

    std::vector<std::size_t> order(d + 1);
    auto diameter = [&](std::size_t best) {
        double dm = 0.0;
        for (std::size_t i = 0; i <= d; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += (pts[i][j] - pts[best][j]) * (pts[i][j] - pts[best][j]);
            dm = std::max(dm, std::sqrt(s));
        }
        return dm;
    };
    auto along = [&](const std::vector<double>& c, const std::vector<double>& w, double t) {
        std::vector<double> r(d);
        for (std::size_t j = 0; j < d; ++j) r[j] = c[j] + t * (w[j] - c[j]);
        return r;
    };

    SimplexResult res;
    std::size_t it = 0;
    for (; it < max_iter; ++it) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[d - 1];
        if (diameter(best) < xtol) {
            res.converged = true;
            break;
        }
        std::vector<double> centroid(d, 0.0);
        for (std::size_t i = 0; i <= d; ++i)
            if (i != worst)
                for (std::size_t j = 0; j < d; ++j) centroid[j] += pts[i][j] / static_cast<double>(d);

        auto xr = along(centroid, pts[worst], -1.0);
        const double fr = f(xr);
        if (fr < vals[best]) {
            auto xe = along(centroid, pts[worst], -2.0);
            const double fe = f(xe);
            if (fe < fr) { pts[worst] = std::move(xe); vals[worst] = fe; }
            else { pts[worst] = std::move(xr); vals[worst] = fr; }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = std::move(xr);
            vals[worst] = fr;
            continue;
        }
        const bool outside = fr < vals[worst];
        auto xc = along(centroid, outside ? xr : pts[worst], 0.5);
        const double fc = f(xc);
        if (fc < (outside ? fr : vals[worst])) {
            pts[worst] = std::move(xc);
            vals[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= d; ++i) {
            if (i == best) continue;
            pts[i] = along(pts[best], pts[i], 0.5);
            vals[i] = f(pts[i]);
        }
    }
    const std::size_t best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    res.x = pts[best];
    res.value = vals[best];
    res.iterations = it;
    res.diameter = diameter(best);
    return res;
}

struct FitResult {
    double lambda_hat = 0.0;
    AgingKernel kernel_hat = AgingKernel::lognormal(0.0, 1.0);
    int m_used = 1;
    double neg_log_likelihood = 0.0;
    double predicted_ultimate = 0.0;
    bool converged = false;
    bool low_data = false;
    std::size_t iterations = 0;
    std::size_t events = 0;
};

namespace detail {

// Unconstrained coordinates: [log lambda, kernel...] with log for positive
// kernel parameters.
inline AgingKernel kernel_from(AgingKernel::Kind kind, std::span<const double> x) {
    switch (kind) {
        case AgingKernel::Kind::LogNormal: return AgingKernel::lognormal(x[0], std::exp(x[1]));
        case AgingKernel::Kind::Exponential: return AgingKernel::exponential(std::exp(x[0]));
        case AgingKernel::Kind::Uniform: return AgingKernel::uniform(std::exp(x[0]));
    }
    throw ValidationError("unknown kernel kind");
}

inline bool representable(AgingKernel::Kind kind, std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v) || std::abs(v) > 700.0) return false;
    return kind != AgingKernel::Kind::LogNormal || std::abs(x[1]) < 50.0;
}

}  // namespace detail

/**
 * Maximum-likelihood fit of (lambda, kernel parameters) to pooled histories
 * sharing one relative fitness and one aging kernel. Three deterministic
 * Nelder–Mead starts are run and the best is restarted until it stops
 * improving; lambda is then set to its exact conditional optimum n/exposure.
 * Fewer than five events yields a non-converged, low-data result.
 */
inline FitResult fit(std::span<const Observed> data, int m, AgingKernel::Kind kind) {
    if (m < 1) throw ValidationError("fit: m must be >= 1");
    FitResult r;
    r.m_used = m;

    std::vector<double> ages;
    for (const auto& o : data) {
        o.history->validate();
        for (double t : o.history->event_times) ages.push_back(t - o.history->pub_time);
    }
    r.events = ages.size();

    // Moment-based starting kernel.
    std::vector<double> theta0;
    switch (kind) {
        case AgingKernel::Kind::LogNormal: {
            double mu = 0.0, s2 = 0.0;
            for (double a : ages) mu += std::log(a);
            if (!ages.empty()) mu /= static_cast<double>(ages.size());
            for (double a : ages) s2 += (std::log(a) - mu) * (std::log(a) - mu);
            const double sd = ages.size() > 1 ? std::sqrt(s2 / static_cast<double>(ages.size() - 1)) : 1.0;
            theta0 = {mu, std::log(sd > 1e-3 ? sd : 1.0)};
            break;
        }
        case AgingKernel::Kind::Exponential: {
            const double mean = ages.empty() ? 1.0 : std::accumulate(ages.begin(), ages.end(), 0.0) / ages.size();
            theta0 = {-std::log(mean)};
            break;
        }
        case AgingKernel::Kind::Uniform: {
            const double mx = ages.empty() ? 1.0 : *std::max_element(ages.begin(), ages.end());
            theta0 = {std::log(1.1 * mx)};
            break;
        }
    }

    if (ages.empty()) {
        r.kernel_hat = detail::kernel_from(kind, theta0);
        r.lambda_hat = 0.0;
        r.neg_log_likelihood = neg_log_likelihood(data, 0.0, r.kernel_hat, m);
        r.predicted_ultimate = ultimate_citations(r.lambda_hat, m);
        r.low_data = true;
        return r;
    }

    const double mean_events = static_cast<double>(ages.size()) / static_cast<double>(std::max<std::size_t>(data.size(), 1));
    const double lambda0 = std::clamp(std::log1p(mean_events / m), 1e-3, 50.0);

    auto objective = [&](const std::vector<double>& x) {
        std::span<const double> theta(x.data() + 1, x.size() - 1);
        if (!std::isfinite(x[0]) || std::abs(x[0]) > 700.0 || !detail::representable(kind, theta))
            return kNllSaturation;
        return neg_log_likelihood(data, std::exp(x[0]), detail::kernel_from(kind, theta), m);
    };

    std::vector<std::vector<double>> starts;
    for (double shift : {0.0, -0.5, 0.5}) {
        std::vector<double> x{std::log(lambda0) + shift};
        for (double t : theta0) x.push_back(t + 0.5 * shift);
        starts.push_back(std::move(x));
    }
    const std::vector<double> step(starts[0].size(), 0.3);

    SimplexResult best;
    best.value = std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    for (const auto& x0 : starts) {
        auto res = nelder_mead(objective, x0, step);
        iterations += res.iterations;
        if (res.value < best.value) best = std::move(res);
    }
    // Restart from the best vertex until the simplex stops moving.
    for (int restart = 0; restart < 10; ++restart) {
        const std::vector<double> small(best.x.size(), 0.05);
        auto res = nelder_mead(objective, best.x, small);
        iterations += res.iterations;
        const bool moved = res.value < best.value - 1e-12 * std::abs(best.value);
        if (res.value <= best.value) best = std::move(res);
        if (!moved) break;
    }

    std::span<const double> theta(best.x.data() + 1, best.x.size() - 1);
    r.kernel_hat = detail::kernel_from(kind, theta);
    const auto parts = likelihood_parts(data, r.kernel_hat, m);
    r.lambda_hat = parts.exposure > 0.0 ? static_cast<double>(parts.events) / parts.exposure : std::exp(best.x[0]);
    r.neg_log_likelihood = nll_from_parts(parts, r.lambda_hat);
    r.predicted_ultimate = ultimate_citations(r.lambda_hat, m);
    r.iterations = iterations;
    r.low_data = r.events < 5;
    r.converged = best.converged && !r.low_data;
    return r;
}

inline FitResult fit(const CitationHistory& h, int m, AgingKernel::Kind kind, double observation_end) {
    const Observed o{&h, observation_end};
    return fit(std::span<const Observed>(&o, 1), m, kind);
}

}  // namespace citelab
