#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "citelab/aging.hpp"
#include "citelab/error.hpp"
#include "citelab/fit.hpp"
#include "citelab/model.hpp"
#include "citelab/ode.hpp"
#include "citelab/sim.hpp"

namespace citelab::io {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

// Six significant digits, as used in human-facing tables.
inline std::string format_sig6(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

inline double parse_double(std::string_view s, std::size_t line, std::string_view what) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end)
        throw ParseError("invalid number for " + std::string(what) + ": '" + std::string(s) + "'", line);
    return v;
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Kernel syntax: lognormal:<mu>,<sigma> | exponential:<rate> | uniform:<horizon>
inline std::string format_kernel(const AgingKernel& k) {
    switch (k.kind()) {
        case AgingKernel::Kind::LogNormal:
            return "lognormal:" + format_double(k.as<AgingKernel::LogNormal>().mu) + "," +
                   format_double(k.as<AgingKernel::LogNormal>().sigma);
        case AgingKernel::Kind::Exponential:
            return "exponential:" + format_double(k.as<AgingKernel::Exponential>().rate);
        case AgingKernel::Kind::Uniform:
            return "uniform:" + format_double(k.as<AgingKernel::Uniform>().horizon);
    }
    return {};
}

inline AgingKernel parse_kernel(std::string_view spec) {
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos) throw ValidationError("kernel spec needs '<kind>:<params>'");
    const auto kind = spec.substr(0, colon);
    std::vector<double> params;
    auto rest = spec.substr(colon + 1);
    while (true) {
        const auto comma = rest.find(',');
        const auto tok = rest.substr(0, comma);
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw ValidationError("kernel spec: bad number '" + std::string(tok) + "'");
        params.push_back(v);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    if (kind == "lognormal" && params.size() == 2) return AgingKernel::lognormal(params[0], params[1]);
    if (kind == "exponential" && params.size() == 1) return AgingKernel::exponential(params[0]);
    if (kind == "uniform" && params.size() == 1) return AgingKernel::uniform(params[0]);
    throw ValidationError("kernel spec: unknown kind or wrong parameter count in '" + std::string(spec) + "'");
}

inline AgingKernel::Kind parse_kernel_kind(std::string_view s) {
    if (s == "lognormal") return AgingKernel::Kind::LogNormal;
    if (s == "exponential") return AgingKernel::Kind::Exponential;
    if (s == "uniform") return AgingKernel::Kind::Uniform;
    throw ValidationError("unknown kernel kind '" + std::string(s) + "'");
}

inline json kernel_json(const AgingKernel& k) {
    json j{{"kind", kind_name(k.kind())}};
    switch (k.kind()) {
        case AgingKernel::Kind::LogNormal:
            j["mu"] = k.as<AgingKernel::LogNormal>().mu;
            j["sigma"] = k.as<AgingKernel::LogNormal>().sigma;
            break;
        case AgingKernel::Kind::Exponential: j["rate"] = k.as<AgingKernel::Exponential>().rate; break;
        case AgingKernel::Kind::Uniform: j["horizon"] = k.as<AgingKernel::Uniform>().horizon; break;
    }
    return j;
}

// ---- citation histories -------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

// Groups, sorts and validates parsed histories; output ordered by paper_id.
inline std::vector<CitationHistory> finalize(std::map<std::string, CitationHistory>& by_id) {
    std::vector<CitationHistory> out;
    out.reserve(by_id.size());
    for (auto& [id, h] : by_id) {
        std::sort(h.event_times.begin(), h.event_times.end());
        h.validate();
        out.push_back(std::move(h));
    }
    return out;
}

}  // namespace detail

/// Parses `paper_id,pub_time,event_time` rows. Lines starting with '#' are
/// metadata and skipped. A paper without citations appears once with an empty
/// event_time.
inline std::vector<CitationHistory> parse_history_csv(std::istream& in) {
    std::map<std::string, CitationHistory> by_id;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto view = detail::trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto cols = detail::split(view, ',');
        if (!header_seen) {
            if (cols.size() != 3 || cols[0] != "paper_id" || cols[1] != "pub_time" || cols[2] != "event_time")
                throw ParseError("expected header 'paper_id,pub_time,event_time'", lineno);
            header_seen = true;
            continue;
        }
        if (cols.size() != 3) throw ParseError("expected 3 columns, got " + std::to_string(cols.size()), lineno);
        if (cols[0].empty()) throw ParseError("empty paper_id", lineno);
        const std::string id(cols[0]);
        const double pub = parse_double(cols[1], lineno, "pub_time");
        auto [it, inserted] = by_id.try_emplace(id, CitationHistory{id, pub, {}});
        if (!inserted && it->second.pub_time != pub)
            throw ParseError("paper '" + id + "' has conflicting pub_time", lineno);
        if (!cols[2].empty()) {
            const double t = parse_double(cols[2], lineno, "event_time");
            if (!(t > pub))
                throw ValidationError("line " + std::to_string(lineno) + ": paper '" + id +
                                      "' has citation at or before publication");
            it->second.event_times.push_back(t);
        }
    }
    if (!header_seen) throw ParseError("missing header", lineno);
    return detail::finalize(by_id);
}

inline std::vector<CitationHistory> parse_history_json(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), 0);
    }
    if (!doc.is_array()) throw ValidationError("history JSON must be an array");
    std::map<std::string, CitationHistory> by_id;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& rec = doc[i];
        try {
            CitationHistory h{rec.at("paper_id").get<std::string>(), rec.at("pub_time").get<double>(),
                              rec.at("event_times").get<std::vector<double>>()};
            if (by_id.count(h.paper_id)) throw ValidationError("duplicate paper_id '" + h.paper_id + "'");
            by_id.emplace(h.paper_id, std::move(h));
        } catch (const json::exception& e) {
            throw ValidationError("record " + std::to_string(i) + ": " + e.what());
        }
    }
    return detail::finalize(by_id);
}

inline std::vector<CitationHistory> parse_history(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    const bool is_json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
    return is_json ? parse_history_json(in) : parse_history_csv(in);
}

inline void write_metadata(std::ostream& out, std::string_view config_hash, std::uint64_t seed) {
    out << "# citelab " << kVersion << " config_hash=" << config_hash << " seed=" << seed << '\n';
}

inline void write_history_csv(std::ostream& out, std::span<const CitationHistory> histories) {
    out << "paper_id,pub_time,event_time\n";
    for (const auto& h : histories) {
        if (h.paper_id.find_first_of(",\n\r") != std::string::npos)
            throw ValidationError("paper_id '" + h.paper_id + "' cannot be written to CSV");
        if (h.event_times.empty()) out << h.paper_id << ',' << format_double(h.pub_time) << ",\n";
        for (double t : h.event_times)
            out << h.paper_id << ',' << format_double(h.pub_time) << ',' << format_double(t) << '\n';
    }
}

inline json history_json(std::span<const CitationHistory> histories) {
    json arr = json::array();
    for (const auto& h : histories)
        arr.push_back({{"paper_id", h.paper_id}, {"pub_time", h.pub_time}, {"event_times", h.event_times}});
    return arr;
}

// ---- other artifacts ----------------------------------------------------

inline void write_ensemble_csv(std::ostream& out, const EnsembleStats& s) {
    out << "dt,mean_c,stderr_c,n\n";
    for (std::size_t i = 0; i < s.grid.size(); ++i)
        out << format_double(s.grid[i]) << ',' << format_double(s.mean_c[i]) << ','
            << format_double(s.stderr_c[i]) << ',' << s.n << '\n';
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int m) {
    out << "dt,f,c_implied\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        out << format_double(traj.times[i]) << ',' << format_double(traj.values[i]) << ','
            << format_double(m * (traj.values[i] - 1.0)) << '\n';
}

inline json fixed_point_json(const FixedPointReport& r) {
    return {{"variant", ode_variant_name(r.variant)},
            {"lambda", r.lambda},
            {"kernel", kernel_json(r.kernel)},
            {"m", r.m},
            {"t_end", r.t_end},
            {"tol", r.tol},
            {"max_abs_deviation", r.max_abs_deviation},
            {"max_implied_citations", r.max_implied_citations},
            {"final_implied_citations", r.final_implied_citations},
            {"verdict", r.verdict}};
}

inline json fit_json(const FitResult& r) {
    return {{"lambda_hat", r.lambda_hat},
            {"kernel_hat", kernel_json(r.kernel_hat)},
            {"m_used", r.m_used},
            {"neg_log_likelihood", r.neg_log_likelihood},
            {"predicted_ultimate", r.predicted_ultimate},
            {"converged", r.converged},
            {"low_data", r.low_data},
            {"iterations", r.iterations},
            {"events", r.events}};
}

// ---- arbitration report -------------------------------------------------

/// Arbitration result plus the provenance needed to reproduce it. Both
/// renderers read the same rows, so the markdown table is the JSON rounded.
struct ArbitrationReport {
    ArbitrationVerdict verdict;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version = kVersion;
};

inline std::string arbitration_config_string(const SimConfig& cfg) {
    return std::string("arbitrate") + " lambda=" + format_double(cfg.lambda) + " m=" + std::to_string(cfg.m) +
           " kernel=" + format_kernel(cfg.kernel) +
           " horizon=" + (cfg.horizon ? format_double(*cfg.horizon) : std::string("exhaust")) +
           " replicas=" + std::to_string(cfg.replicas) + " seed=" + std::to_string(cfg.seed);
}

inline ArbitrationReport make_arbitration_report(const SimConfig& cfg, unsigned threads = 1) {
    ArbitrationReport rep;
    rep.verdict = arbitrate(cfg, threads);
    rep.config_hash = hex64(fnv1a(arbitration_config_string(cfg)));
    rep.seed = cfg.seed;
    return rep;
}

inline json z_json(double z) { return std::isinf(z) ? json(nullptr) : json(z); }

inline json arbitration_json(const ArbitrationReport& rep) {
    json rows = json::array();
    for (const auto& r : rep.verdict.rows) {
        rows.push_back({{"variant", variant_name(r.variant)},
                        {"lambda", r.lambda},
                        {"m", r.m},
                        {"kernel", format_kernel(r.kernel)},
                        {"n_replicas", r.n_replicas},
                        {"sim_mean", r.sim_mean},
                        {"sim_stderr", r.sim_stderr},
                        {"pred_zero_limit", r.pred_zero_limit},
                        {"pred_closed_form", r.pred_closed_form},
                        {"within_3se_of_zero_limit", r.within_3se_of_zero_limit},
                        {"within_3se_of_closed_form", r.within_3se_of_closed_form},
                        {"z_zero_limit", z_json(r.z_zero_limit())},
                        {"z_closed_form", z_json(r.z_closed_form())},
                        {"verdict", r.verdict()}});
    }
    return {{"rows", rows},
            {"metadata", {{"seed", rep.seed}, {"config_hash", rep.config_hash}, {"version", rep.version}}}};
}

inline std::string arbitration_markdown(const ArbitrationReport& rep) {
    std::ostringstream out;
    out << "# Citation arbitration\n\n"
        << "seed " << rep.seed << ", config " << rep.config_hash << ", citelab " << rep.version << "\n\n"
        << "| variant | lambda | m | kernel | n | sim mean | sim stderr | zero-limit prediction "
           "| closed-form prediction | within 3se of zero limit | within 3se of closed form | verdict |\n"
        << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : rep.verdict.rows) {
        out << "| " << variant_name(r.variant) << " | " << format_sig6(r.lambda) << " | " << r.m << " | "
            << format_kernel(r.kernel) << " | " << r.n_replicas << " | " << format_sig6(r.sim_mean) << " | "
            << format_sig6(r.sim_stderr) << " | " << format_sig6(r.pred_zero_limit) << " | "
            << format_sig6(r.pred_closed_form) << " | " << (r.within_3se_of_zero_limit ? "yes" : "no") << " | "
            << (r.within_3se_of_closed_form ? "yes" : "no") << " | " << r.verdict() << " |\n";
    }
    return out.str();
}

}  // namespace citelab::io
