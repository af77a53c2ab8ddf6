#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "citelab/io.hpp"

using namespace citelab;
namespace cio = citelab::io;

namespace {

std::vector<CitationHistory> random_histories(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<CitationHistory> hs;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
        CitationHistory h{"paper-" + std::to_string(i), 100.0 * u(rng) - 50.0, {}};
        const int events = static_cast<int>(rng() % 6);
        double t = h.pub_time;
        for (int e = 0; e < events; ++e) {
            t += rng() % 4 == 0 ? 0.0 : 1e-3 + 10.0 * u(rng);
            if (t == h.pub_time) t = std::nextafter(t, 1e9);
            h.event_times.push_back(t);
        }
        hs.push_back(std::move(h));
    }
    std::sort(hs.begin(), hs.end(), [](const auto& a, const auto& b) { return a.paper_id < b.paper_id; });
    return hs;
}

}  // namespace

TEST_CASE("kernel spec parsing", "[io]") {
    const auto k = cio::parse_kernel("lognormal:0,1");
    CHECK(k == AgingKernel::lognormal(0.0, 1.0));
    CHECK(cio::parse_kernel("exponential:2.5") == AgingKernel::exponential(2.5));
    CHECK(cio::parse_kernel("uniform:10") == AgingKernel::uniform(10.0));
    CHECK(cio::parse_kernel(cio::format_kernel(AgingKernel::lognormal(-0.1, 0.3))) ==
          AgingKernel::lognormal(-0.1, 0.3));
    CHECK_THROWS_AS(cio::parse_kernel("lognormal:0"), ValidationError);
    CHECK_THROWS_AS(cio::parse_kernel("gamma:1,2"), ValidationError);
    CHECK_THROWS_AS(cio::parse_kernel("exponential:x"), ValidationError);
    CHECK_THROWS_AS(cio::parse_kernel("exponential"), ValidationError);
    CHECK_THROWS_AS(cio::parse_kernel("exponential:-1"), ValidationError);
}

TEST_CASE("history CSV parsing", "[io]") {
    std::istringstream in(
        "paper_id,pub_time,event_time\n"
        "a,0,3.5\n"
        "a,0,1.25\n"
        "a,0,2\n"
        "b,1,\n");
    const auto hs = cio::parse_history_csv(in);
    REQUIRE(hs.size() == 2);
    CHECK(hs[0].paper_id == "a");
    CHECK(hs[0].event_times == std::vector<double>{1.25, 2.0, 3.5});
    CHECK(hs[0].count_at(std::numeric_limits<double>::infinity()) == 3);
    CHECK(hs[1].event_times.empty());
}

TEST_CASE("history CSV errors carry context", "[io]") {
    {
        std::istringstream in("paper_id,pub_time,event_time\na,0,1\nzz,5,2\n");
        try {
            cio::parse_history_csv(in);
            FAIL("expected a validation error");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("zz") != std::string::npos);
        }
    }
    {
        std::istringstream in("paper_id,pub_time,event_time\na,0,1\na,0,oops\n");
        try {
            cio::parse_history_csv(in);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
    }
    {
        std::istringstream in("paper_id,pub_time,event_time\na,0\n");
        CHECK_THROWS_AS(cio::parse_history_csv(in), ParseError);
    }
    {
        std::istringstream in("id,t\n");
        CHECK_THROWS_AS(cio::parse_history_csv(in), ParseError);
    }
    {
        std::istringstream in("paper_id,pub_time,event_time\na,0,1\na,1,2\n");
        CHECK_THROWS_AS(cio::parse_history_csv(in), ParseError);
    }
}

TEST_CASE("history JSON parsing", "[io]") {
    std::istringstream in(R"([{"paper_id":"z","pub_time":0,"event_times":[2,1]},
                              {"paper_id":"y","pub_time":1.5,"event_times":[]}])");
    const auto hs = cio::parse_history_json(in);
    REQUIRE(hs.size() == 2);
    CHECK(hs[0].paper_id == "y");
    CHECK(hs[1].event_times == std::vector<double>{1.0, 2.0});

    std::istringstream bad(R"([{"paper_id":"q","pub_time":3,"event_times":[1]}])");
    CHECK_THROWS_AS(cio::parse_history_json(bad), ValidationError);
    std::istringstream missing(R"([{"paper_id":"q"}])");
    CHECK_THROWS_AS(cio::parse_history_json(missing), ValidationError);
}

TEST_CASE("history CSV and JSON round trips", "[io][property]") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        const auto hs = random_histories(rng);
        std::ostringstream csv;
        cio::write_metadata(csv, "deadbeef", 7);
        cio::write_history_csv(csv, hs);
        std::istringstream in(csv.str());
        REQUIRE(cio::parse_history_csv(in) == hs);

        std::istringstream jin(cio::history_json(hs).dump());
        REQUIRE(cio::parse_history_json(jin) == hs);
    }
}

TEST_CASE("ids that would corrupt CSV are refused", "[io]") {
    std::ostringstream out;
    const std::vector<CitationHistory> hs{{"a,b", 0.0, {}}};
    CHECK_THROWS_AS(cio::write_history_csv(out, hs), ValidationError);
}

TEST_CASE("number formatting", "[io]") {
    CHECK(cio::format_double(0.1) == "0.1");
    CHECK(std::stod(cio::format_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(cio::format_sig6(5.154845485377136) == "5.15485");
    CHECK(cio::format_sig6(0.0) == "0");
    CHECK(cio::fnv1a("") == 0xcbf29ce484222325ull);
    CHECK(cio::fnv1a("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("arbitration renderers agree", "[io][arbitrate]") {
    SimConfig cfg;
    cfg.lambda = 1.0;
    cfg.m = 3;
    cfg.replicas = 2000;
    cfg.seed = 42;
    const auto rep = cio::make_arbitration_report(cfg);
    const auto js = cio::arbitration_json(rep);
    const auto md = cio::arbitration_markdown(rep);
    CHECK(js["metadata"]["seed"] == 42);
    CHECK(js["metadata"]["config_hash"].get<std::string>().size() == 16);
    CHECK(js["rows"].size() == 2);

    // Every numeric markdown cell is the JSON value rounded to six digits.
    for (const auto& row : js["rows"]) {
        const std::string line_start = "| " + row["variant"].get<std::string>() + " |";
        const auto pos = md.find(line_start);
        REQUIRE(pos != std::string::npos);
        const std::string line = md.substr(pos, md.find('\n', pos) - pos);
        std::vector<std::string> cells;
        std::size_t s = 1;
        while (true) {
            const auto e = line.find('|', s);
            if (e == std::string::npos) break;
            std::string cell = line.substr(s, e - s);
            cell.erase(0, cell.find_first_not_of(' '));
            cell.erase(cell.find_last_not_of(' ') + 1);
            cells.push_back(cell);
            s = e + 1;
        }
        REQUIRE(cells.size() == 12);
        CHECK(cells[1] == cio::format_sig6(row["lambda"].get<double>()));
        CHECK(cells[2] == std::to_string(row["m"].get<int>()));
        CHECK(cells[3] == row["kernel"].get<std::string>());
        CHECK(cells[4] == std::to_string(row["n_replicas"].get<std::size_t>()));
        CHECK(cells[5] == cio::format_sig6(row["sim_mean"].get<double>()));
        CHECK(cells[6] == cio::format_sig6(row["sim_stderr"].get<double>()));
        CHECK(cells[7] == cio::format_sig6(row["pred_zero_limit"].get<double>()));
        CHECK(cells[8] == cio::format_sig6(row["pred_closed_form"].get<double>()));
        CHECK(cells[9] == (row["within_3se_of_zero_limit"].get<bool>() ? "yes" : "no"));
        CHECK(cells[10] == (row["within_3se_of_closed_form"].get<bool>() ? "yes" : "no"));
        CHECK(cells[11] == row["verdict"].get<std::string>());

        // The booleans are reproducible from the row alone.
        const double mean = row["sim_mean"], se = row["sim_stderr"];
        CHECK(row["within_3se_of_closed_form"].get<bool>() ==
              (std::abs(mean - row["pred_closed_form"].get<double>()) <= 3.0 * se));
        CHECK(row["pred_closed_form"].get<double>() == 3.0 * std::expm1(1.0));
    }
}

TEST_CASE("arbitration JSON is byte-identical across runs and thread counts", "[io][determinism]") {
    SimConfig cfg;
    cfg.lambda = 1.0;
    cfg.m = 3;
    cfg.replicas = 3000;
    cfg.seed = 7;
    const auto a = cio::arbitration_json(cio::make_arbitration_report(cfg, 1)).dump(2);
    const auto b = cio::arbitration_json(cio::make_arbitration_report(cfg, 1)).dump(2);
    const auto c = cio::arbitration_json(cio::make_arbitration_report(cfg, 8)).dump(2);
    CHECK(a == b);
    CHECK(a == c);
}

TEST_CASE("other artifact writers", "[io]") {
    const auto traj = integrate(OdeVariant::OriginalS14, 1.0, AgingKernel::exponential(1.0), 5.0, 1e-8,
                                uniform_grid(5.0, 6));
    std::ostringstream out;
    cio::write_trajectory_csv(out, traj, 3);
    const auto text = out.str();
    CHECK(text.rfind("dt,f,c_implied\n0,1,0\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 7);

    FitResult r;
    r.lambda_hat = 0.5;
    r.m_used = 2;
    r.predicted_ultimate = ultimate_citations(0.5, 2);
    const auto j = cio::fit_json(r);
    CHECK(j["lambda_hat"] == 0.5);
    CHECK(j["kernel_hat"]["kind"] == "lognormal");
    CHECK(j["predicted_ultimate"].get<double>() == ultimate_citations(0.5, 2));
}
