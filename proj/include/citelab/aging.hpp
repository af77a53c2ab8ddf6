#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <variant>

#include <boost/math/special_functions/erf.hpp>

#include "citelab/error.hpp"

namespace citelab {

/**
 * Waiting-time density governing how citability evolves with paper age.
 *
 * Three families are supported. All densities vanish for negative ages and
 * integrate to one on [0, inf). Parameters are validated on construction, so
 * a constructed kernel is always usable.
 */
class AgingKernel {
public:
    struct LogNormal {
        double mu;
        double sigma;
    };
    struct Exponential {
        double rate;
    };
    struct Uniform {
        double horizon;
    };
    enum class Kind { LogNormal, Exponential, Uniform };

    static AgingKernel lognormal(double mu, double sigma) {
        if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(mu))
            throw ValidationError("lognormal kernel requires finite mu and sigma > 0");
        return AgingKernel(LogNormal{mu, sigma});
    }
    static AgingKernel exponential(double rate) {
        if (!(rate > 0.0) || !std::isfinite(rate))
            throw ValidationError("exponential kernel requires rate > 0");
        return AgingKernel(Exponential{rate});
    }
    static AgingKernel uniform(double horizon) {
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw ValidationError("uniform kernel requires horizon > 0");
        return AgingKernel(Uniform{horizon});
    }

    Kind kind() const noexcept { return static_cast<Kind>(params_.index()); }

    template <class T>
    const T& as() const {
        return std::get<T>(params_);
    }

    double pdf(double dt) const {
        if (!(dt >= 0.0)) return 0.0;
        return std::visit(
            [dt](const auto& p) -> double {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, LogNormal>) {
                    if (dt == 0.0 || std::isinf(dt)) return 0.0;
                    const double z = (std::log(dt) - p.mu) / p.sigma;
                    return std::exp(-0.5 * z * z) /
                           (dt * p.sigma * std::sqrt(2.0 * std::numbers::pi));
                } else if constexpr (std::is_same_v<T, Exponential>) {
                    return p.rate * std::exp(-p.rate * dt);
                } else {
                    return dt <= p.horizon ? 1.0 / p.horizon : 0.0;
                }
            },
            params_);
    }

    double cdf(double dt) const {
        if (!(dt > 0.0)) return 0.0;
        return std::visit(
            [dt](const auto& p) -> double {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, LogNormal>) {
                    if (std::isinf(dt)) return 1.0;
                    const double z = (std::log(dt) - p.mu) / p.sigma;
                    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
                } else if constexpr (std::is_same_v<T, Exponential>) {
                    return -std::expm1(-p.rate * dt);
                } else {
                    return std::min(dt / p.horizon, 1.0);
                }
            },
            params_);
    }

    // 1 - cdf, computed without cancellation in the upper tail.
    double survival(double dt) const {
        if (!(dt > 0.0)) return 1.0;
        return std::visit(
            [dt](const auto& p) -> double {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, LogNormal>) {
                    if (std::isinf(dt)) return 0.0;
                    const double z = (std::log(dt) - p.mu) / p.sigma;
                    return 0.5 * std::erfc(z / std::numbers::sqrt2);
                } else if constexpr (std::is_same_v<T, Exponential>) {
                    return std::exp(-p.rate * dt);
                } else {
                    return std::max(1.0 - dt / p.horizon, 0.0);
                }
            },
            params_);
    }

    // Probability mass on (a, b]; picks the better-conditioned difference.
    double mass(double a, double b) const {
        if (b <= a) return 0.0;
        if (cdf(a) > 0.5) return survival(a) - survival(b);
        return cdf(b) - cdf(a);
    }

    // Smallest dt with cdf(dt) = p, for p in [0, 1].
    double quantile(double p) const {
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile: probability outside [0, 1]");
        if (p > 0.5) return survival_quantile(1.0 - p);
        if (p == 0.0) return 0.0;
        return std::visit(
            [p](const auto& k) -> double {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, LogNormal>) {
                    const double z = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
                    return std::exp(k.mu + k.sigma * z);
                } else if constexpr (std::is_same_v<T, Exponential>) {
                    return -std::log1p(-p) / k.rate;
                } else {
                    return p * k.horizon;
                }
            },
            params_);
    }

    // dt with survival(dt) = s, for s in [0, 1].
    double survival_quantile(double s) const {
        if (!(s >= 0.0 && s <= 1.0)) throw DomainError("survival_quantile: probability outside [0, 1]");
        if (s == 1.0) return 0.0;
        if (s > 0.5) return quantile(1.0 - s);
        return std::visit(
            [s](const auto& k) -> double {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, LogNormal>) {
                    if (s == 0.0) return std::numeric_limits<double>::infinity();
                    const double z = std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * s);
                    return std::exp(k.mu + k.sigma * z);
                } else if constexpr (std::is_same_v<T, Exponential>) {
                    if (s == 0.0) return std::numeric_limits<double>::infinity();
                    return -std::log(s) / k.rate;
                } else {
                    return (1.0 - s) * k.horizon;
                }
            },
            params_);
    }

    // Age at which the kernel is exhausted to within `eps`, capped at `cap`.
    double exhaust_time(double eps = 1e-9, double cap = 1e4) const {
        return std::min(survival_quantile(eps), cap);
    }

    friend bool operator==(const AgingKernel& a, const AgingKernel& b) {
        if (a.kind() != b.kind()) return false;
        switch (a.kind()) {
            case Kind::LogNormal:
                return a.as<LogNormal>().mu == b.as<LogNormal>().mu &&
                       a.as<LogNormal>().sigma == b.as<LogNormal>().sigma;
            case Kind::Exponential:
                return a.as<Exponential>().rate == b.as<Exponential>().rate;
            case Kind::Uniform:
                return a.as<Uniform>().horizon == b.as<Uniform>().horizon;
        }
        return false;
    }

private:
    using Params = std::variant<LogNormal, Exponential, Uniform>;
    explicit AgingKernel(Params p) : params_(p) {}

    Params params_;
};

inline const char* kind_name(AgingKernel::Kind k) {
    switch (k) {
        case AgingKernel::Kind::LogNormal: return "lognormal";
        case AgingKernel::Kind::Exponential: return "exponential";
        case AgingKernel::Kind::Uniform: return "uniform";
    }
    return "?";
}

}  // namespace citelab
