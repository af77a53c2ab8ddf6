// citelab command-line front end.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "citelab/citelab.hpp"

using namespace citelab;
namespace cio = citelab::io;

namespace {

unsigned default_threads() {
    if (const char* env = std::getenv("CITELAB_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return 1;
}

KernelVariant parse_variant(const std::string& s) {
    if (s == "literal") return KernelVariant::Literal;
    if (s == "attractiveness" || s == "with-attractiveness") return KernelVariant::WithAttractiveness;
    throw ValidationError("unknown kernel variant '" + s + "' (literal | attractiveness)");
}

OdeVariant parse_ode_variant(const std::string& s) {
    if (s == "c1" || s == "comment-c1") return OdeVariant::CommentC1;
    if (s == "s14" || s == "original-s14") return OdeVariant::OriginalS14;
    throw ValidationError("unknown ODE variant '" + s + "' (c1 | s14)");
}

std::optional<double> parse_horizon(const std::string& s) {
    if (s == "exhaust") return std::nullopt;
    return cio::parse_double(s, 0, "horizon");
}

// Writes to `path`, or stdout when empty or "-".
void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << text;
}

std::string hash_of(const std::string& canonical) { return cio::hex64(cio::fnv1a(canonical)); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"citelab: citation-dynamics arbitration laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", cio::kVersion);

    unsigned threads = default_threads();
    std::string out_path;

    // simulate
    std::string variant = "attractiveness", kernel_spec = "lognormal:0,1", horizon = "exhaust";
    double lambda = 1.0;
    int m = 3;
    std::size_t replicas = 10000;
    std::uint64_t seed = 42;
    auto* sim = app.add_subcommand("simulate", "single-paper ensemble, writes ensemble statistics CSV");
    sim->add_option("--variant", variant, "literal | attractiveness")->capture_default_str();
    sim->add_option("--lambda", lambda, "relative fitness")->capture_default_str();
    sim->add_option("--m", m, "initial attractiveness")->capture_default_str();
    sim->add_option("--kernel", kernel_spec, "aging kernel")->capture_default_str();
    sim->add_option("--horizon", horizon, "age horizon or 'exhaust'")->capture_default_str();
    sim->add_option("--replicas", replicas)->capture_default_str();
    sim->add_option("--seed", seed)->capture_default_str();
    sim->add_option("--threads", threads)->capture_default_str();
    sim->add_option("--out", out_path, "output path (default stdout)");

    // system
    double beta = 1.0, big_a = 1.0, t_end_sys = 4.0, eta = 1.0;
    int n0 = 50, refs = 0;
    std::string eta_range;
    auto* sys_cmd = app.add_subcommand("system", "full growing-network run, writes histories CSV");
    sys_cmd->add_option("--beta", beta)->capture_default_str();
    sys_cmd->add_option("--A", big_a)->capture_default_str();
    sys_cmd->add_option("--m", m)->capture_default_str();
    sys_cmd->add_option("--n0", n0)->capture_default_str();
    sys_cmd->add_option("--t-end", t_end_sys)->capture_default_str();
    sys_cmd->add_option("--eta", eta, "constant fitness")->capture_default_str();
    sys_cmd->add_option("--eta-range", eta_range, "lo,hi for uniformly sampled fitness");
    sys_cmd->add_option("--refs", refs, "references per paper (default m)");
    sys_cmd->add_option("--variant", variant)->capture_default_str();
    sys_cmd->add_option("--kernel", kernel_spec)->capture_default_str();
    sys_cmd->add_option("--seed", seed)->capture_default_str();
    sys_cmd->add_option("--out", out_path);

    // integrate
    std::string ode_variant = "s14", t_end_str = "exhaust";
    double tol = 1e-10;
    std::size_t points = 1001;
    auto* integ = app.add_subcommand("integrate", "mean-field trajectory CSV (dt, f, c_implied)");
    integ->add_option("--variant", ode_variant, "c1 | s14")->capture_default_str();
    integ->add_option("--lambda", lambda)->capture_default_str();
    integ->add_option("--m", m)->capture_default_str();
    integ->add_option("--kernel", kernel_spec)->capture_default_str();
    integ->add_option("--t-end", t_end_str, "age horizon or 'exhaust'")->capture_default_str();
    integ->add_option("--tol", tol)->capture_default_str();
    integ->add_option("--points", points, "grid points")->capture_default_str();
    integ->add_option("--out", out_path);

    // verify-c2
    auto* verify = app.add_subcommand("verify-c2", "check that f = 1 solves the corrected equation (JSON)");
    verify->add_option("--lambda", lambda)->capture_default_str();
    verify->add_option("--m", m)->capture_default_str();
    verify->add_option("--kernel", kernel_spec)->capture_default_str();
    verify->add_option("--t-end", t_end_str)->capture_default_str();
    verify->add_option("--tol", tol)->capture_default_str();
    verify->add_option("--out", out_path);

    // fit
    std::string input, kind_str = "lognormal", obs_end_str;
    auto* fit_cmd = app.add_subcommand("fit", "maximum-likelihood fit of pooled histories (JSON)");
    fit_cmd->add_option("--input", input, "history CSV or JSON")->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("--m", m)->capture_default_str();
    fit_cmd->add_option("--kernel-kind", kind_str, "lognormal | exponential | uniform")->capture_default_str();
    fit_cmd->add_option("--observation-end", obs_end_str, "censoring time or 'inf' (default: last event)");
    fit_cmd->add_option("--out", out_path);

    // predict
    auto* predict = app.add_subcommand("predict", "ultimate citations m (e^lambda - 1)");
    predict->add_option("--lambda", lambda)->required();
    predict->add_option("--m", m)->required();

    // arbitrate
    std::string json_path, md_path, format = "json";
    auto* arb = app.add_subcommand("arbitrate", "simulate both kernel readings against both predictions");
    arb->add_option("--lambda", lambda)->capture_default_str();
    arb->add_option("--m", m)->capture_default_str();
    arb->add_option("--kernel", kernel_spec)->capture_default_str();
    arb->add_option("--horizon", horizon)->capture_default_str();
    arb->add_option("--replicas", replicas)->capture_default_str();
    arb->add_option("--seed", seed)->capture_default_str();
    arb->add_option("--threads", threads)->capture_default_str();
    arb->add_option("--format", format, "json | markdown")->capture_default_str();
    arb->add_option("--json", json_path, "also write the JSON report here");
    arb->add_option("--markdown", md_path, "also write the markdown report here");
    arb->add_option("--out", out_path);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            SimConfig cfg;
            cfg.variant = parse_variant(variant);
            cfg.lambda = lambda;
            cfg.m = m;
            cfg.kernel = cio::parse_kernel(kernel_spec);
            cfg.horizon = parse_horizon(horizon);
            cfg.replicas = replicas;
            cfg.seed = seed;
            const auto stats = simulate_ensemble(cfg, threads);
            const std::string canon = "simulate variant=" + std::string(variant_name(cfg.variant)) +
                                      " lambda=" + cio::format_double(lambda) + " m=" + std::to_string(m) +
                                      " kernel=" + cio::format_kernel(cfg.kernel) + " horizon=" + horizon +
                                      " replicas=" + std::to_string(replicas) + " seed=" + std::to_string(seed);
            std::ostringstream out;
            cio::write_metadata(out, hash_of(canon), seed);
            cio::write_ensemble_csv(out, stats);
            emit(out_path, out.str());
        } else if (*sys_cmd) {
            SystemSimConfig cfg;
            cfg.sys = SystemParams{beta, big_a, m, n0};
            cfg.t_end = t_end_sys;
            if (!eta_range.empty()) {
                const auto comma = eta_range.find(',');
                if (comma == std::string::npos) throw ValidationError("--eta-range expects lo,hi");
                cfg.fitness = FitnessSource::sampled_uniform(cio::parse_double(eta_range.substr(0, comma), 0, "eta lo"),
                                                             cio::parse_double(eta_range.substr(comma + 1), 0, "eta hi"));
            } else {
                cfg.fitness = FitnessSource::constant(eta);
            }
            cfg.variant = parse_variant(variant);
            cfg.kernel = cio::parse_kernel(kernel_spec);
            cfg.refs_per_paper = refs > 0 ? refs : m;
            cfg.seed = seed;
            const auto run = simulate_system(cfg);
            const std::string canon =
                "system beta=" + cio::format_double(beta) + " A=" + cio::format_double(big_a) +
                " m=" + std::to_string(m) + " n0=" + std::to_string(n0) + " t_end=" + cio::format_double(t_end_sys) +
                " eta=" + (eta_range.empty() ? cio::format_double(eta) : "uniform:" + eta_range) +
                " variant=" + variant_name(cfg.variant) + " kernel=" + cio::format_kernel(cfg.kernel) +
                " refs=" + std::to_string(cfg.refs_per_paper) + " seed=" + std::to_string(seed);
            std::ostringstream out;
            cio::write_metadata(out, hash_of(canon), seed);
            out << "# papers=" << run.histories.size() << " lambda_eff_unit=" << cio::format_double(run.lambda_eff_unit)
                << " mean_normalization=" << cio::format_double(run.mean_normalization) << '\n';
            cio::write_history_csv(out, run.histories);
            emit(out_path, out.str());
        } else if (*integ) {
            const auto kernel = cio::parse_kernel(kernel_spec);
            const double t_end = t_end_str == "exhaust" ? default_t_end(kernel)
                                                        : cio::parse_double(t_end_str, 0, "t-end");
            const auto v = parse_ode_variant(ode_variant);
            const auto traj = integrate(v, lambda, kernel, t_end, tol, uniform_grid(t_end, points));
            const std::string canon = "integrate variant=" + std::string(ode_variant_name(v)) +
                                      " lambda=" + cio::format_double(lambda) + " m=" + std::to_string(m) +
                                      " kernel=" + cio::format_kernel(kernel) + " t_end=" + cio::format_double(t_end) +
                                      " tol=" + cio::format_double(tol) + " points=" + std::to_string(points);
            std::ostringstream out;
            out << "# citelab " << cio::kVersion << " config_hash=" << hash_of(canon) << " seed=none\n";
            cio::write_trajectory_csv(out, traj, m);
            emit(out_path, out.str());
        } else if (*verify) {
            const auto kernel = cio::parse_kernel(kernel_spec);
            const double t_end = t_end_str == "exhaust" ? default_t_end(kernel)
                                                        : cio::parse_double(t_end_str, 0, "t-end");
            const auto rep = verify_fixed_point(lambda, kernel, t_end, tol, m);
            const std::string canon = "verify-c2 lambda=" + cio::format_double(lambda) + " m=" + std::to_string(m) +
                                      " kernel=" + cio::format_kernel(kernel) + " t_end=" + cio::format_double(t_end) +
                                      " tol=" + cio::format_double(tol);
            auto j = cio::fixed_point_json(rep);
            j["metadata"] = {{"config_hash", hash_of(canon)}, {"seed", nullptr}, {"version", cio::kVersion}};
            emit(out_path, j.dump(2) + "\n");
            return rep.verdict ? 0 : 3;
        } else if (*fit_cmd) {
            const auto histories = cio::parse_history(input);
            double obs_end = -std::numeric_limits<double>::infinity();
            if (obs_end_str.empty()) {
                for (const auto& h : histories) {
                    obs_end = std::max(obs_end, h.pub_time);
                    if (!h.event_times.empty()) obs_end = std::max(obs_end, h.event_times.back());
                }
            } else if (obs_end_str == "inf") {
                obs_end = std::numeric_limits<double>::infinity();
            } else {
                obs_end = cio::parse_double(obs_end_str, 0, "observation-end");
            }
            std::vector<Observed> data;
            for (const auto& h : histories) data.push_back({&h, obs_end});
            const auto r = fit(data, m, cio::parse_kernel_kind(kind_str));
            std::ifstream raw(input, std::ios::binary);
            std::ostringstream content;
            content << raw.rdbuf();
            const std::string canon = "fit input=" + cio::hex64(cio::fnv1a(content.str())) + " m=" + std::to_string(m) +
                                      " kind=" + kind_str + " observation_end=" + cio::format_double(obs_end);
            auto j = cio::fit_json(r);
            j["metadata"] = {{"config_hash", hash_of(canon)}, {"seed", nullptr}, {"version", cio::kVersion}};
            emit(out_path, j.dump(2) + "\n");
        } else if (*predict) {
            std::cout << cio::format_double(ultimate_citations(lambda, m)) << '\n';
        } else if (*arb) {
            SimConfig cfg;
            cfg.lambda = lambda;
            cfg.m = m;
            cfg.kernel = cio::parse_kernel(kernel_spec);
            cfg.horizon = parse_horizon(horizon);
            cfg.replicas = replicas;
            cfg.seed = seed;
            const auto t0 = std::chrono::steady_clock::now();
            const auto rep = cio::make_arbitration_report(cfg, threads);
            const std::string js = cio::arbitration_json(rep).dump(2) + "\n";
            const std::string md = cio::arbitration_markdown(rep);
            if (!json_path.empty()) emit(json_path, js);
            if (!md_path.empty()) emit(md_path, md);
            if (format == "json") emit(out_path, js);
            else if (format == "markdown") emit(out_path, md);
            else throw ValidationError("unknown format '" + format + "'");
            std::cerr << "arbitrate: " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
                      << " s on " << threads << " thread(s)\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "citelab: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
