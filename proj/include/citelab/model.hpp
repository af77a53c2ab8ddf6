#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "citelab/aging.hpp"
#include "citelab/error.hpp"

namespace citelab {

// System-wide growth and normalization constants.
struct SystemParams {
    double beta = 1.0;   // exponential growth rate of the paper count
    double big_a = 1.0;  // attachment normalization
    int m = 1;           // references per new paper, also the initial attractiveness
    int n0 = 1;          // paper count at t = 0

    void validate() const {
        if (!(beta > 0.0) || !(big_a > 0.0) || m < 1 || n0 < 1)
            throw ValidationError("system parameters require beta > 0, A > 0, m >= 1, n0 >= 1");
    }
};

// Which count term enters the attachment weight.
enum class KernelVariant {
    Literal,             // eta * c * P(dt)
    WithAttractiveness,  // eta * (c + m) * P(dt)
};

inline const char* variant_name(KernelVariant v) {
    return v == KernelVariant::Literal ? "literal" : "with-attractiveness";
}

inline double paper_count(double t, const SystemParams& sys) {
    if (!(t >= 0.0)) throw DomainError("paper_count: negative time");
    return static_cast<double>(sys.n0) * std::exp(sys.beta * t);
}

inline double relative_fitness(double eta, const SystemParams& sys) {
    if (!(eta >= 0.0)) throw DomainError("relative_fitness: negative fitness");
    return eta * sys.beta / sys.big_a;
}

/// Per-paper parameters. The relative fitness may be given directly, in which
/// case the raw fitness is left empty and recovered from the system constants
/// on demand.
struct PaperParams {
    std::optional<double> eta;
    double lambda = 0.0;
    AgingKernel aging = AgingKernel::lognormal(0.0, 1.0);
    double pub_time = 0.0;

    static PaperParams from_fitness(double eta, const SystemParams& sys, AgingKernel aging,
                                    double pub_time = 0.0) {
        return PaperParams{eta, relative_fitness(eta, sys), aging, pub_time};
    }
    static PaperParams from_lambda(double lambda, AgingKernel aging, double pub_time = 0.0) {
        if (!(lambda >= 0.0)) throw DomainError("relative fitness must be >= 0");
        return PaperParams{std::nullopt, lambda, aging, pub_time};
    }

    double raw_fitness(const SystemParams& sys) const {
        return eta ? *eta : lambda * sys.big_a / sys.beta;
    }
};

// Unnormalized attachment weight of a paper with `c` citations at age `dt`.
inline double kernel_weight(double c, double dt, const PaperParams& p, KernelVariant variant,
                            const SystemParams& sys) {
    const double count_term = variant == KernelVariant::Literal ? c : c + sys.m;
    return p.raw_fitness(sys) * count_term * p.aging.pdf(dt);
}

inline double ultimate_citations(double lambda, int m) {
    if (!(lambda >= 0.0)) throw DomainError("ultimate_citations: negative relative fitness");
    return m * std::expm1(lambda);
}

// Mean-field citation count at age dt: m (exp(lambda cdf(dt)) - 1).
inline double citation_curve(double lambda, int m, const AgingKernel& kernel, double dt) {
    if (!(lambda >= 0.0)) throw DomainError("citation_curve: negative relative fitness");
    if (!(dt >= 0.0)) throw DomainError("citation_curve: negative age");
    return m * std::expm1(lambda * kernel.cdf(dt));
}

// Citation curve implied by the f = 1 fixed point: identically zero.
inline double comment_curve(double dt) {
    if (!(dt >= 0.0)) throw DomainError("comment_curve: negative age");
    return 0.0;
}

/// Publication time and nondecreasing citation times of one paper.
struct CitationHistory {
    std::string paper_id;
    double pub_time = 0.0;
    std::vector<double> event_times;

    // c(t): number of events at or before t.
    std::size_t count_at(double t) const {
        return static_cast<std::size_t>(
            std::upper_bound(event_times.begin(), event_times.end(), t) - event_times.begin());
    }
    std::size_t total() const { return event_times.size(); }

    void validate() const {
        for (std::size_t i = 0; i < event_times.size(); ++i) {
            if (!(event_times[i] > pub_time))
                throw ValidationError("paper '" + paper_id + "': citation at or before publication");
            if (i > 0 && event_times[i] < event_times[i - 1])
                throw ValidationError("paper '" + paper_id + "': citation times not sorted");
        }
    }

    friend bool operator==(const CitationHistory&, const CitationHistory&) = default;
};

}  // namespace citelab
