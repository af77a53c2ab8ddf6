#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "citelab/aging.hpp"
#include "citelab/error.hpp"
#include "citelab/model.hpp"
#include "citelab/rng.hpp"
#include "citelab/stats.hpp"

namespace citelab {

/// Runs body(i) for i in [0, n) on up to `threads` workers with a static
/// partition. Each index must write only to its own output slot.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += threads) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

// Configuration of the single-paper reduced process.
struct SimConfig {
    KernelVariant variant = KernelVariant::WithAttractiveness;
    double lambda = 1.0;
    int m = 1;
    AgingKernel kernel = AgingKernel::lognormal(0.0, 1.0);
    std::optional<double> horizon;  // empty: run until the kernel is exhausted
    std::uint64_t seed = 0;
    std::size_t replicas = 1;
    std::vector<double> grid;  // ages for ensemble summaries; empty selects kernel quantiles

    void validate() const {
        if (replicas < 1) throw ValidationError("replicas must be >= 1");
        if (horizon && !(*horizon > 0.0)) throw ValidationError("horizon must be > 0");
        if (!(lambda >= 0.0)) throw DomainError("relative fitness must be >= 0");
        if (m < 1) throw ValidationError("m must be >= 1");
    }

    double horizon_time() const { return horizon ? *horizon : kernel.exhaust_time(1e-9, 1e4); }
};

inline double count_term(KernelVariant variant, std::size_t c, int m) {
    return variant == KernelVariant::Literal ? static_cast<double>(c) : static_cast<double>(c) + m;
}

/**
 * Exact simulation of one paper's citation history.
 *
 * The intensity lambda * w(c) * P(dt) becomes a homogeneous pure birth with
 * rate w(c) under the clock tau = lambda * cdf(dt). Each waiting time is
 * drawn in that clock and mapped back through the kernel quantile, so no
 * thinning is needed. Under the literal reading w(0) = 0 and the process
 * never leaves c = 0.
 */
inline CitationHistory simulate_single(const SimConfig& cfg, std::uint64_t replica_seed) {
    Stream rng(replica_seed);
    CitationHistory h;
    h.pub_time = 0.0;
    const double p_end = cfg.kernel.cdf(cfg.horizon_time());
    double p = 0.0;
    std::size_t c = 0;
    for (;;) {
        const double rate = cfg.lambda * count_term(cfg.variant, c, cfg.m);
        if (!(rate > 0.0)) break;
        const double p_next = p + rng.exponential() / rate;
        if (p_next >= p_end) break;
        const double dt = cfg.kernel.quantile(p_next);
        if (!std::isfinite(dt) || std::abs(cfg.kernel.cdf(dt) - p_next) > 1e-12)
            throw InversionError("kernel cdf inversion failed at probability " + std::to_string(p_next));
        // Quantiles of tiny probabilities can round to zero age.
        h.event_times.push_back(std::max(dt, std::nextafter(h.pub_time, 1.0)));
        p = p_next;
        ++c;
    }
    return h;
}

inline std::vector<double> default_grid(const AgingKernel& kernel, double horizon) {
    std::vector<double> grid;
    for (double level : {0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.999}) {
        const double dt = kernel.quantile(level);
        if (dt < horizon) grid.push_back(dt);
    }
    grid.push_back(horizon);
    return grid;
}

inline std::vector<CitationHistory> simulate_histories(const SimConfig& cfg, unsigned threads = 1) {
    cfg.validate();
    std::vector<CitationHistory> out(cfg.replicas);
    parallel_for(cfg.replicas, threads, [&](std::size_t k) {
        out[k] = simulate_single(cfg, substream_seed(cfg.seed, k));
        out[k].paper_id = "replica-" + std::to_string(k);
    });
    return out;
}

/**
 * Inter-event increments in the rescaled clock, lambda * w(c_i) * (cdf(t_{i+1})
 * - cdf(t_i)), pooled over histories simulated under `cfg`.
 *
 * Only increments that ended before the horizon are observed, so each one is
 * an Exponential(1) draw truncated at the remaining rescaled time R_i. With
 * `censoring_corrected` the increment x is mapped to -log(1 - F(x) / F(R_i)),
 * F(x) = 1 - exp(-x), which restores an exact Exponential(1) law.
 */
inline std::vector<double> rescaled_increments(std::span<const CitationHistory> histories, const SimConfig& cfg,
                                               bool censoring_corrected = true) {
    std::vector<double> out;
    const double p_end = cfg.kernel.cdf(cfg.horizon_time());
    for (const auto& h : histories) {
        double p = 0.0;
        std::size_t c = 0;
        for (double t : h.event_times) {
            const double q = cfg.kernel.cdf(t - h.pub_time);
            const double w = cfg.lambda * count_term(cfg.variant, c, cfg.m);
            const double x = w * (q - p);
            if (censoring_corrected) {
                const double remaining = w * (p_end - p);
                out.push_back(-std::log1p(-std::expm1(-x) / std::expm1(-remaining)));
            } else {
                out.push_back(x);
            }
            p = q;
            ++c;
        }
    }
    return out;
}

/// Monte-Carlo summary of cumulative citation counts on a shared age grid.
struct EnsembleStats {
    std::vector<double> grid;
    std::vector<double> mean_c;
    std::vector<double> stderr_c;
    std::size_t n = 0;
    std::vector<int> final_counts;
};

inline EnsembleStats summarize(std::span<const CitationHistory> histories, std::vector<double> grid) {
    EnsembleStats s;
    s.n = histories.size();
    s.grid = std::move(grid);
    s.final_counts.reserve(histories.size());
    for (const auto& h : histories) s.final_counts.push_back(static_cast<int>(h.total()));
    std::vector<int> column(histories.size());
    for (double dt : s.grid) {
        for (std::size_t k = 0; k < histories.size(); ++k)
            column[k] = static_cast<int>(histories[k].count_at(histories[k].pub_time + dt));
        const auto ms = stats::mean_stderr<int>(column);
        s.mean_c.push_back(ms.mean);
        s.stderr_c.push_back(ms.stderr_);
    }
    return s;
}

inline EnsembleStats simulate_ensemble(const SimConfig& cfg, unsigned threads = 1) {
    if (cfg.replicas < 2) throw ValidationError("ensemble requires at least 2 replicas");
    const auto histories = simulate_histories(cfg, threads);
    const double horizon = cfg.horizon_time();
    return summarize(histories, cfg.grid.empty() ? default_grid(cfg.kernel, horizon) : cfg.grid);
}

/// Goodness of fit of final counts against the pure-birth law
/// c + m ~ NegativeBinomial(m, exp(-lambda)) (counting trials).
struct GofReport {
    double lambda = 0.0;
    int m = 1;
    std::size_t n = 0;
    bool degenerate = false;
    bool pass = false;
    double p_value = 1.0;
    double chi_square = 0.0;
    int dof = 0;
    double sample_mean = 0.0;
    double sample_variance = 0.0;
    double expected_mean = 0.0;
    double expected_variance = 0.0;
};

inline GofReport final_count_distribution_test(const EnsembleStats& stats, double lambda, int m,
                                               double alpha = 0.01) {
    if (stats.final_counts.size() < 1000)
        throw SampleSizeError("distribution test needs at least 1000 replicas, got " +
                              std::to_string(stats.final_counts.size()));
    GofReport r;
    r.lambda = lambda;
    r.m = m;
    r.n = stats.final_counts.size();
    const auto ms = stats::mean_stderr<int>(stats.final_counts);
    r.sample_mean = ms.mean;
    r.sample_variance = ms.variance;
    r.expected_mean = m * std::expm1(lambda);
    r.expected_variance = m * std::exp(lambda) * std::expm1(lambda);
    if (lambda == 0.0) {
        r.degenerate = true;
        r.pass = std::all_of(stats.final_counts.begin(), stats.final_counts.end(),
                             [](int c) { return c == 0; });
        r.p_value = r.pass ? 1.0 : 0.0;
        return r;
    }
    const double p = std::exp(-lambda);
    // Failures count of NB(m, p) is exactly c.
    const auto chi = stats::chi_square_gof(
        std::span<const int>(stats.final_counts), [&](int k) { return stats::negative_binomial_pmf(m, p, k); });
    r.chi_square = chi.statistic;
    r.dof = chi.dof;
    r.p_value = chi.p_value;
    r.pass = r.p_value > alpha;
    return r;
}

// Per-paper fitness in the growing system.
struct FitnessSource {
    enum class Kind { Constant, SampledUniform } kind = Kind::Constant;
    double value = 1.0;  // Constant
    double lo = 0.0, hi = 1.0;  // SampledUniform

    static FitnessSource constant(double eta) { return {Kind::Constant, eta, 0.0, 0.0}; }
    static FitnessSource sampled_uniform(double lo, double hi) { return {Kind::SampledUniform, 0.0, lo, hi}; }
};

struct SystemSimConfig {
    SystemParams sys;
    double t_end = 1.0;
    FitnessSource fitness = FitnessSource::constant(1.0);
    KernelVariant variant = KernelVariant::WithAttractiveness;
    AgingKernel kernel = AgingKernel::lognormal(0.0, 1.0);
    int refs_per_paper = 1;
    std::uint64_t seed = 0;

    void validate() const {
        sys.validate();
        if (!(t_end > 0.0)) throw ValidationError("t_end must be > 0");
        if (refs_per_paper < 1) throw ValidationError("refs_per_paper must be >= 1");
        if (fitness.kind == FitnessSource::Kind::Constant && !(fitness.value >= 0.0))
            throw ValidationError("fitness must be >= 0");
        if (fitness.kind == FitnessSource::Kind::SampledUniform && !(fitness.lo >= 0.0 && fitness.hi >= fitness.lo))
            throw ValidationError("fitness range must satisfy 0 <= lo <= hi");
    }

    // floor(n0 exp(beta t_end)), the paper count reached by the arrival schedule.
    std::size_t final_paper_count() const {
        return static_cast<std::size_t>(std::floor(paper_count(t_end, sys)));
    }
};

/// Output of a full growing-system run.
struct SystemRun {
    std::vector<CitationHistory> histories;  // index order = arrival order
    std::vector<double> eta;
    std::vector<int> out_refs;
    // Relative fitness of a unit-fitness paper under the realized normalization:
    // the pdf-weighted average of m beta N(t) / Z(t) over the arrival schedule.
    double lambda_eff_unit = 0.0;
    double mean_normalization = 0.0;  // beta / lambda_eff_unit

    // Running sums behind lambda_eff_unit, one entry per arrival time.
    std::vector<double> calib_times;
    std::vector<double> calib_weighted;  // sum of m pdf(t_k) / Z_k
    std::vector<double> calib_mass;      // sum of pdf(t_k) (t_k - t_{k-1})

    // Calibration restricted to ages in [0, dt] of the initial cohort.
    double lambda_eff_until(double dt) const {
        const auto it = std::upper_bound(calib_times.begin(), calib_times.end(), dt);
        if (it == calib_times.begin()) return 0.0;
        const auto i = static_cast<std::size_t>(it - calib_times.begin()) - 1;
        return calib_mass[i] > 0.0 ? calib_weighted[i] / calib_mass[i] : 0.0;
    }
};

/**
 * Growing citation network. Papers arrive on the deterministic schedule
 * t_k = ln(k / n0) / beta so that N(t_k) = k, and each new paper draws its
 * references without replacement from the existing papers with probability
 * proportional to the attachment weight. If every weight is zero the new
 * paper cites nothing.
 */
inline SystemRun simulate_system(const SystemSimConfig& cfg) {
    cfg.validate();
    const auto& sys = cfg.sys;
    const std::size_t n0 = static_cast<std::size_t>(sys.n0);
    const std::size_t n_final = std::max(cfg.final_paper_count(), n0);

    SystemRun run;
    run.histories.resize(n_final);
    run.eta.resize(n_final);
    run.out_refs.assign(n_final, 0);
    std::vector<std::size_t> counts(n_final, 0);

    Stream fitness_rng(substream_seed(cfg.seed, 0));
    Stream draw_rng(substream_seed(cfg.seed, 1));
    for (std::size_t k = 0; k < n_final; ++k) {
        run.eta[k] = cfg.fitness.kind == FitnessSource::Kind::Constant
                         ? cfg.fitness.value
                         : fitness_rng.uniform(cfg.fitness.lo, cfg.fitness.hi);
        run.histories[k].paper_id = "p" + std::to_string(k);
        run.histories[k].pub_time =
            k < n0 ? 0.0 : std::log(static_cast<double>(k + 1) / static_cast<double>(n0)) / sys.beta;
    }

    std::vector<double> weights;
    std::vector<std::size_t> chosen;
    double lam_num = 0.0, lam_den = 0.0;
    for (std::size_t k = n0; k < n_final; ++k) {
        const double t = run.histories[k].pub_time;
        const double dt_arrival = t - run.histories[k - 1].pub_time;
        weights.assign(k, 0.0);
        double total = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double age = t - run.histories[j].pub_time;
            const double w = run.eta[j] * count_term(cfg.variant, counts[j], sys.m) * cfg.kernel.pdf(age);
            weights[j] = w;
            total += w;
        }
        const double pdf_now = cfg.kernel.pdf(t);
        if (total > 0.0) lam_num += static_cast<double>(cfg.refs_per_paper) * pdf_now / total;
        lam_den += pdf_now * dt_arrival;
        run.calib_times.push_back(t);
        run.calib_weighted.push_back(lam_num);
        run.calib_mass.push_back(lam_den);

        chosen.clear();
        for (int r = 0; r < cfg.refs_per_paper && total > 0.0; ++r) {
            const double target = draw_rng.uniform() * total;
            double acc = 0.0;
            std::size_t pick = k;
            for (std::size_t j = 0; j < k; ++j) {
                if (weights[j] <= 0.0) continue;
                acc += weights[j];
                pick = j;
                if (acc > target) break;
            }
            if (pick == k) break;
            chosen.push_back(pick);
            total -= weights[pick];
            weights[pick] = 0.0;
            if (total <= 0.0) {
                total = 0.0;
                for (double w : weights) total += w;
            }
        }
        for (std::size_t j : chosen) {
            ++counts[j];
            run.histories[j].event_times.push_back(t);
        }
        run.out_refs[k] = static_cast<int>(chosen.size());
    }
    // m beta N / Z summed once per arrival approximates its time integral,
    // since arrivals occur at rate beta N.
    run.lambda_eff_unit = lam_den > 0.0 ? lam_num / lam_den : 0.0;
    run.mean_normalization = run.lambda_eff_unit > 0.0 ? sys.beta / run.lambda_eff_unit : 0.0;
    return run;
}

/// One row of the arbitration: what the simulation says under one kernel
/// reading, set against the two competing predictions for the ultimate count.
struct ArbitrationRow {
    KernelVariant variant = KernelVariant::Literal;
    double lambda = 0.0;
    int m = 1;
    AgingKernel kernel = AgingKernel::lognormal(0.0, 1.0);
    std::size_t n_replicas = 0;
    double sim_mean = 0.0;
    double sim_stderr = 0.0;
    double pred_zero_limit = 0.0;   // c_inf = 0
    double pred_closed_form = 0.0;  // c_inf = m (e^lambda - 1)
    bool within_3se_of_zero_limit = false;
    bool within_3se_of_closed_form = false;

    // |mean - prediction| in standard errors; infinite when stderr is zero
    // and the values differ.
    static double z_score(double mean, double stderr_, double pred) {
        const double d = std::abs(mean - pred);
        if (d == 0.0) return 0.0;
        return stderr_ > 0.0 ? d / stderr_ : std::numeric_limits<double>::infinity();
    }
    double z_zero_limit() const { return z_score(sim_mean, sim_stderr, pred_zero_limit); }
    double z_closed_form() const { return z_score(sim_mean, sim_stderr, pred_closed_form); }

    std::string verdict() const {
        if (within_3se_of_zero_limit && within_3se_of_closed_form) return "indistinguishable";
        if (within_3se_of_zero_limit) return "matches zero limit";
        if (within_3se_of_closed_form) return "matches closed form";
        return "matches neither";
    }
};

inline bool within_3se(double mean, double stderr_, double pred) {
    return std::abs(mean - pred) <= 3.0 * stderr_;
}

inline ArbitrationRow make_row(KernelVariant variant, double lambda, int m, const AgingKernel& kernel,
                               std::size_t n, double mean, double se) {
    ArbitrationRow row;
    row.variant = variant;
    row.lambda = lambda;
    row.m = m;
    row.kernel = kernel;
    row.n_replicas = n;
    row.sim_mean = mean;
    row.sim_stderr = se;
    row.pred_zero_limit = 0.0;
    row.pred_closed_form = ultimate_citations(lambda, m);
    row.within_3se_of_zero_limit = within_3se(mean, se, row.pred_zero_limit);
    row.within_3se_of_closed_form = within_3se(mean, se, row.pred_closed_form);
    return row;
}

struct ArbitrationVerdict {
    std::vector<ArbitrationRow> rows;  // literal first, then with-attractiveness
    std::uint64_t seed = 0;
};

// Simulates both kernel readings at identical parameters and seed.
inline ArbitrationVerdict arbitrate(const SimConfig& cfg, unsigned threads = 1) {
    ArbitrationVerdict v;
    v.seed = cfg.seed;
    for (KernelVariant variant : {KernelVariant::Literal, KernelVariant::WithAttractiveness}) {
        SimConfig c = cfg;
        c.variant = variant;
        c.grid = {c.horizon_time()};
        const auto stats = simulate_ensemble(c, threads);
        const auto ms = stats::mean_stderr<int>(stats.final_counts);
        v.rows.push_back(make_row(variant, cfg.lambda, cfg.m, cfg.kernel, stats.n, ms.mean, ms.stderr_));
    }
    return v;
}

}  // namespace citelab
