#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "adaptivefl/config.hpp"
#include "adaptivefl/metrics.hpp"

using namespace adaptivefl;

namespace {

std::filesystem::path scratch_dir() {
    const auto dir = std::filesystem::path("config_test_scratch");
    std::filesystem::create_directories(dir);
    return dir;
}

std::filesystem::path write_temp_config(const std::string& name, const std::string& body) {
    const auto path = scratch_dir() / name;
    std::ofstream out(path);
    out << body;
    return path;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<RoundRecord> fake_records(int n) {
    std::vector<RoundRecord> recs;
    for (int i = 0; i < n; ++i) {
        RoundRecord r;
        r.round = i;
        r.acc_full = 0.5 + 0.01 * i;
        r.acc_l1 = r.acc_full;
        r.acc_m1 = 0.4 + 0.01 * i;
        r.acc_s1 = 0.3 + 0.01 * i;
        r.waste_to_date = 0.1;
        r.dispatches.push_back({0, 0, i, 100, 100});
        r.t_c = CuriosityTable(2);
        r.t_r = ResourceTable(5, 2);
        recs.push_back(std::move(r));
    }
    return recs;
}

}  // namespace

TEST_CASE("bundled example config parses to the fine-grained pool") {
    const ExperimentConfigFile cfg =
        parse_config(std::string(ADAPTIVEFL_CONFIG_DIR) + "/example.json");
    CHECK(cfg.params.pool.p == 3);
    CHECK(cfg.params.pool.level_ratios.at(Level::S) == 0.40);
    CHECK(cfg.params.pool.level_ratios.at(Level::M) == 0.66);
    CHECK(cfg.params.pool.start_layers == std::vector<int>{3, 2, 1});
    CHECK(cfg.params.scenario.strategy == Strategy::adaptivefl);
    CHECK(cfg.params.seed == 1);
    // The pool it defines really builds.
    const ModelSpec spec{cfg.params.layer_dims, cfg.params.pool.tau};
    const ModelPool pool = build_pool(spec, cfg.params.pool.level_ratios,
                                      cfg.params.pool.start_layers);
    CHECK(pool.count() == 7);
}

TEST_CASE("out-of-range width ratio is rejected naming level_ratios") {
    const auto path = write_temp_config("bad_ratio.json", R"({
      "seed": 1,
      "pool": { "p": 1, "level_ratios": { "S": 1.3, "M": 0.66 }, "start_layers": [2], "tau": 2 }
    })");
    try {
        parse_config(path.string());
        FAIL("expected rejection");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("level_ratios") != std::string::npos);
    }
}

TEST_CASE("a config without a seed is rejected") {
    const auto path = write_temp_config("no_seed.json", R"({ "out_dir": "x" })");
    try {
        parse_config(path.string());
        FAIL("expected rejection");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("seed") != std::string::npos);
    }
}

TEST_CASE("unknown keys are rejected by name") {
    const auto path = write_temp_config("unknown.json", R"({ "seed": 1, "sneaky": 3 })");
    try {
        parse_config(path.string());
        FAIL("expected rejection");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("sneaky") != std::string::npos);
    }
    const auto nested = write_temp_config("unknown2.json",
                                          R"({ "seed": 1, "train": { "lr": 0.1 } })");
    try {
        parse_config(nested.string());
        FAIL("expected rejection");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("train.lr") != std::string::npos);
    }
}

TEST_CASE("missing files and malformed JSON are rejected") {
    CHECK_THROWS_AS(parse_config("/nonexistent/config.json"), std::runtime_error);
    const auto path = write_temp_config("broken.json", "{ not json");
    CHECK_THROWS_AS(parse_config(path.string()), std::runtime_error);
}

TEST_CASE("invalid strategy names are rejected") {
    const auto path = write_temp_config("bad_strategy.json", R"({
      "seed": 1, "scenario": { "strategy": "psychic" }
    })");
    CHECK_THROWS_AS(parse_config(path.string()), std::runtime_error);
}

TEST_CASE("config echo round-trips to a fixpoint") {
    const ExperimentConfigFile cfg =
        parse_config(std::string(ADAPTIVEFL_CONFIG_DIR) + "/example.json");
    ExperimentConfigFile echoed = cfg;
    echoed.out_dir = (scratch_dir() / "echo").string();
    write_config_echo(echoed);
    const auto echo_path = scratch_dir() / "echo" / "config.json";
    const ExperimentConfigFile reparsed = parse_config(echo_path.string());
    const std::string first = config_to_json(reparsed);
    ExperimentConfigFile again = reparsed;
    write_config_echo(again);
    CHECK(first == config_to_json(parse_config(echo_path.string())));
    CHECK(config_to_json(cfg).find("\"p\": 3") != std::string::npos);
}

TEST_CASE("emit_metrics writes a header plus one row per record") {
    const auto dir = scratch_dir() / "metrics3";
    emit_metrics(fake_records(3), dir.string());
    std::ifstream csv(dir / "metrics.csv");
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(csv, line)) lines.push_back(line);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "round,acc_full,acc_L1,acc_M1,acc_S1,acc_avg,waste_rate");
    std::ifstream jsonl(dir / "rounds.jsonl");
    std::size_t jl = 0;
    while (std::getline(jsonl, line)) ++jl;
    CHECK(jl == 3);
}

TEST_CASE("acc_avg is the mean of the three level accuracies") {
    const auto dir = scratch_dir() / "metrics_avg";
    emit_metrics(fake_records(2), dir.string());
    std::ifstream csv(dir / "metrics.csv");
    std::string line;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> cols;
        std::getline(ss, tok, ',');  // round
        while (std::getline(ss, tok, ',')) cols.push_back(std::stod(tok));
        REQUIRE(cols.size() == 6);
        const double avg = (cols[1] + cols[2] + cols[3]) / 3.0;
        CHECK(cols[4] == doctest::Approx(avg).epsilon(1e-5));
    }
}

TEST_CASE("emitting the same records twice is byte-identical") {
    const auto d1 = scratch_dir() / "rerun_a";
    const auto d2 = scratch_dir() / "rerun_b";
    const auto recs = fake_records(4);
    emit_metrics(recs, d1.string());
    emit_metrics(recs, d2.string());
    CHECK(slurp(d1 / "metrics.csv") == slurp(d2 / "metrics.csv"));
    CHECK(slurp(d1 / "rounds.jsonl") == slurp(d2 / "rounds.jsonl"));
}

TEST_CASE("emit_metrics rejects empty input and unwritable targets") {
    CHECK_THROWS_AS(emit_metrics({}, "anywhere"), std::invalid_argument);
    CHECK_THROWS(emit_metrics(fake_records(1), "/proc/definitely_unwritable/x"));
}
