#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "nelastic/config.hpp"
#include "nelastic/harness.hpp"
#include "nelastic/limitproc.hpp"

using namespace nelastic;
namespace fs = std::filesystem;

namespace {

std::string where_of(const std::string& text)
{
    try {
        parse_config(text, "cfg.json");
    } catch (const ConfigError& e) {
        return e.where();
    }
    return "no error";
}

std::string run_error(const ExperimentConfig& cfg)
{
    try {
        run(cfg, false);
    } catch (const ConfigError& e) {
        return e.where();
    }
    return "no error";
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string first_line(const fs::path& p)
{
    std::ifstream f(p);
    std::string line;
    std::getline(f, line);
    return line;
}

fs::path scratch_dir(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / ("nelastic-harness-" + name);
    fs::remove_all(d);
    return d;
}

const char* kBranchDyn = R"({
  "experiment": "branching-dyn",
  "model": {"type": "flat", "walls": [-1, 0, 1], "heights": [1], "restitution": [2, 1, 1]},
  "eps": [0.001],
  "delta": [0.1],
  "replicas": 10000,
  "seed": 5,
  "params": {"q0": -0.5, "p0": 4.0, "well": 0,
             "noise": [{"lo": 0.05, "hi": 2.95}, {"lo": 0.05, "hi": 2.95}, {"lo": 0.05, "hi": 2.95}]},
  "assert": true
})";

}  // namespace

TEST_CASE("config diagnostics carry a location")
{
    CHECK(where_of("{\n  \"experiment\": \"walk-parity\",\n  \"eps\": [0.1,]\n}").rfind("cfg.json:3:", 0) == 0);
    CHECK(where_of("[1, 2]") == "cfg.json");
    CHECK(where_of(R"({"experiment": "nope"})") == "experiment");
    CHECK(where_of(R"({"experiment": "walk-parity", "eps": [0.1, 1.5]})") == "eps[1]");
    CHECK(where_of(R"({"experiment": "walk-parity", "delta": [0]})") == "delta[0]");
    CHECK(where_of(R"({"experiment": "walk-parity", "replicas": 0})") == "replicas");
    CHECK(where_of(R"({"experiment": "walk-parity", "replicas": 2.5})") == "replicas");
    CHECK(where_of(R"({"experiment": "walk-parity", "assert": "yes"})") == "assert");
    CHECK(where_of(R"({"experiment": "walk-parity", "params": []})") == "params");
    CHECK(where_of(R"({"experiment": "walk-parity"})") == "no error");

    ExperimentConfig bad = parse_config(kBranchDyn);
    bad.model["restitution"][1] = -1.0;
    CHECK(run_error(bad) == "model.restitution[1]");
    ExperimentConfig short_noise = parse_config(kBranchDyn);
    short_noise.params["noise"].erase(0);
    CHECK(run_error(short_noise).rfind("params.noise", 0) == 0);
    ExperimentConfig wrong_model = parse_config(R"({"experiment": "integral-geometry",
        "model": {"type": "flat", "walls": [-1, 1], "restitution": [1, 1]}})");
    CHECK(run_error(wrong_model) == "model.type");
    ExperimentConfig shape = parse_config(R"({"experiment": "integral-geometry",
        "model": {"type": "billiard", "shape": {"kind": "triangle"}}})");
    CHECK(run_error(shape) == "model.shape.kind");
}

TEST_CASE("comparison semantics")
{
    ResultRecord r;
    r.ci = {0.4, 0.6};
    r.target = 0.65;
    CHECK_FALSE(r.evaluate());
    r.tolerance = 0.05;
    CHECK(r.evaluate());
    r.comparison = Comparison::AtMost;
    r.estimate = 0.1;
    r.target = 0.0;
    r.tolerance = 0.05;
    CHECK_FALSE(r.evaluate());
    r.comparison = Comparison::AtLeast;
    r.target = 0.2;
    CHECK_FALSE(r.evaluate());
    r.target = 0.12;
    CHECK(r.evaluate());
    CHECK(to_string(Comparison::AtLeast) == "at_least");

    RunResult res;
    ResultRecord failing;
    failing.asserted = false;
    failing.pass = false;
    res.records.push_back(failing);
    CHECK(res.all_pass());
    res.records.back().asserted = true;
    CHECK_FALSE(res.all_pass());
}

TEST_CASE("overrides")
{
    const ExperimentConfig base = parse_config(kBranchDyn);
    RunOverrides o;
    o.seed = 9;
    o.replicas = 12;
    o.threads = 3;
    o.out_dir = "elsewhere";
    const ExperimentConfig c = apply_overrides(base, o);
    CHECK(c.seed == 9);
    CHECK(c.replicas == 12);
    CHECK(c.threads == 3);
    CHECK(c.out_dir == "elsewhere");
    RunOverrides zero;
    zero.replicas = 0;
    CHECK_THROWS_AS(apply_overrides(base, zero), ConfigError);
}

TEST_CASE("identical step laws give parity one half")
{
    const ExperimentConfig cfg = parse_config(R"({"experiment": "walk-parity", "replicas": 20000, "seed": 3,
        "params": {"odd": {"lo": 1, "hi": 2}, "even": {"lo": 1, "hi": 2}, "scale": 1000}, "assert": true})");
    const RunResult r = run(cfg, false);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].target == 0.5);
    CHECK(r.records[0].pass);
    CHECK(r.all_pass());
}

TEST_CASE("dynamics-noise branching hits the shifted ratio")
{
    ExperimentConfig cfg = parse_config(kBranchDyn);
    cfg.threads = 2;
    const RunResult r = run(cfg, false);
    REQUIRE(r.records.size() == 1);
    const ResultRecord& rec = r.records[0];
    CHECK(rec.target == doctest::Approx(2.15 / 3.3).epsilon(1e-12));
    CHECK(rec.pass);
    CHECK(r.replica_failures == 0);
    MESSAGE("well-0 frequency " << rec.estimate << " target " << rec.target);
}

TEST_CASE("integral geometry experiment")
{
    const ExperimentConfig cfg = parse_config(R"({"experiment": "integral-geometry",
        "model": {"type": "billiard", "shape": {"kind": "circle", "radius": 1}},
        "params": {"tolerance": 1e-6}, "assert": true})");
    const RunResult r = run(cfg, false);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].pass);
    CHECK(r.records[0].extra.at("two_pi_area").get<double>() == doctest::Approx(2.0 * std::numbers::pi * std::numbers::pi));
}

TEST_CASE("results are byte-identical across reruns and thread counts")
{
    ExperimentConfig cfg = parse_config(kBranchDyn);
    cfg.eps = {1e-2};
    cfg.replicas = 400;
    const fs::path a = scratch_dir("a"), b = scratch_dir("b"), c = scratch_dir("c");
    cfg.threads = 1;
    cfg.out_dir = a.string();
    run(cfg);
    cfg.out_dir = b.string();
    run(cfg);
    cfg.threads = 3;
    cfg.out_dir = c.string();
    const RunResult last = run(cfg);
    const std::string ref = slurp(a / "results.json");
    CHECK(!ref.empty());
    CHECK(ref == slurp(b / "results.json"));
    CHECK(ref == slurp(c / "results.json"));
    for (const auto& f : last.files) {
        CHECK(slurp(a / f) == slurp(c / f));
    }
    const Json doc = Json::parse(ref);
    CHECK(doc.at("schema_version") == kSchemaVersion);
    CHECK(doc.at("records").size() == 1);
    CHECK(doc.at("records")[0].contains("wells"));
}

TEST_CASE("csv headers")
{
    const fs::path d = scratch_dir("csv");
    fs::create_directories(d);
    write_collision_csv(d / "c.csv", {});
    write_path_csv(d / "p.csv", {});
    write_walk_csv(d / "w.csv", {});
    write_billiard_csv(d / "b.csv", {});
    CHECK(first_line(d / "c.csv") == "t,wall,pre_speed,post_speed,energy_after");
    CHECK(first_line(d / "p.csv") == "t,H,K");
    CHECK(first_line(d / "w.csv") == "n,p_even,ci_lo,ci_hi,analytic_limit");
    CHECK(first_line(d / "b.csv") == "n,s,theta,H,t");
}

TEST_CASE("billiard decay closed form")
{
    const LimitModel lim = billiard_limit(0.5, 3.0, 5.0, 1.0, 2.0, 2.0, 3.0);
    const EdgeFlow& top = lim.flows[lim.graph.root];
    for (double t : {0.0, 0.3, 1.0}) {
        CHECK(billiard_energy_closed_form(2.0, 5.0, 3.0, t) == doctest::Approx(edge_solution(top, 2.0, t)).epsilon(1e-13));
    }
}

TEST_CASE("shipped configs parse")
{
    std::size_t n = 0;
    for (const auto& entry : fs::directory_iterator(fs::path(NELASTIC_SOURCE_DIR) / "configs")) {
        if (entry.path().extension() != ".json") {
            continue;
        }
        CAPTURE(entry.path().string());
        const ExperimentConfig cfg = load_config(entry.path());
        CHECK(cfg.assert_results);
        ++n;
    }
    CHECK(n >= 10);
}
