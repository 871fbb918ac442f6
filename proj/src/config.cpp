#include "adaptivefl/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace adaptivefl {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& section, const std::set<std::string>& allowed) {
    for (const auto& item : obj.items())
        if (!allowed.contains(item.key()))
            throw std::runtime_error("config: unknown key \"" + section + item.key() + "\"");
}

template <typename T>
void read(const json& obj, const std::string& section, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::runtime_error("config: bad value for \"" + section + key + "\"");
    }
}

void parse_model(const json& j, ExperimentParams& p) {
    check_keys(j, "model.", {"layer_dims", "activation"});
    read(j, "model.", "layer_dims", p.layer_dims);
    std::string activation = "relu";
    read(j, "model.", "activation", activation);
    if (activation != "relu")
        throw std::runtime_error("config: \"model.activation\" supports only \"relu\"");
}

void parse_pool(const json& j, ExperimentParams& p) {
    check_keys(j, "pool.", {"p", "level_ratios", "start_layers", "tau"});
    read(j, "pool.", "p", p.pool.p);
    read(j, "pool.", "start_layers", p.pool.start_layers);
    read(j, "pool.", "tau", p.pool.tau);
    if (j.contains("level_ratios")) {
        const json& lr = j.at("level_ratios");
        check_keys(lr, "pool.level_ratios.", {"S", "M", "L"});
        p.pool.level_ratios.clear();
        double v = 0.0;
        if (lr.contains("S")) { read(lr, "pool.level_ratios.", "S", v); p.pool.level_ratios[Level::S] = v; }
        if (lr.contains("M")) { read(lr, "pool.level_ratios.", "M", v); p.pool.level_ratios[Level::M] = v; }
        if (lr.contains("L")) { read(lr, "pool.level_ratios.", "L", v); p.pool.level_ratios[Level::L] = v; }
    }
}

void parse_train(const json& j, ExperimentParams& p) {
    check_keys(j, "train.", {"learning_rate", "momentum", "batch_size", "local_epochs"});
    read(j, "train.", "learning_rate", p.train.learning_rate);
    read(j, "train.", "momentum", p.train.momentum);
    read(j, "train.", "batch_size", p.train.batch_size);
    read(j, "train.", "local_epochs", p.train.local_epochs);
    if (p.train.learning_rate <= 0.0)
        throw std::runtime_error("config: \"train.learning_rate\" must be > 0");
    if (p.train.momentum < 0.0 || p.train.momentum >= 1.0)
        throw std::runtime_error("config: \"train.momentum\" must be in [0, 1)");
    if (p.train.batch_size < 1)
        throw std::runtime_error("config: \"train.batch_size\" must be >= 1");
    if (p.train.local_epochs < 1)
        throw std::runtime_error("config: \"train.local_epochs\" must be >= 1");
}

void parse_scenario(const json& j, ExperimentParams& p) {
    check_keys(j, "scenario.", {"n_clients", "clients_per_round", "proportions", "alpha", "iid",
                                "rounds", "strategy"});
    read(j, "scenario.", "n_clients", p.scenario.n_clients);
    read(j, "scenario.", "clients_per_round", p.scenario.clients_per_round);
    if (j.contains("proportions")) {
        std::vector<int> props;
        read(j, "scenario.", "proportions", props);
        if (props.size() != 3)
            throw std::runtime_error("config: \"scenario.proportions\" needs exactly 3 entries");
        p.scenario.proportions = {props[0], props[1], props[2]};
    }
    read(j, "scenario.", "alpha", p.scenario.alpha);
    read(j, "scenario.", "iid", p.scenario.iid);
    read(j, "scenario.", "rounds", p.scenario.rounds);
    if (j.contains("strategy")) {
        std::string name;
        read(j, "scenario.", "strategy", name);
        try {
            p.scenario.strategy = strategy_from_name(name);
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("config: \"scenario.strategy\" has unknown value \"" + name + "\"");
        }
    }
}

void parse_data(const json& j, ExperimentParams& p) {
    check_keys(j, "data.", {"classes", "features", "train_samples", "test_samples", "cluster_std",
                            "file"});
    read(j, "data.", "classes", p.data.classes);
    read(j, "data.", "features", p.data.features);
    read(j, "data.", "train_samples", p.data.train_samples);
    read(j, "data.", "test_samples", p.data.test_samples);
    read(j, "data.", "cluster_std", p.data.cluster_std);
    read(j, "data.", "file", p.data.file);
    if (p.data.file.empty()) {
        if (p.data.classes < 2) throw std::runtime_error("config: \"data.classes\" must be >= 2");
        if (p.data.features < 1) throw std::runtime_error("config: \"data.features\" must be >= 1");
        if (p.data.train_samples < 1 || p.data.test_samples < 1)
            throw std::runtime_error("config: \"data.train_samples\"/\"data.test_samples\" must be >= 1");
        if (p.data.cluster_std <= 0.0)
            throw std::runtime_error("config: \"data.cluster_std\" must be > 0");
    }
}

// Everything the run would reject later must already be rejected here.
void revalidate(const ExperimentParams& p) {
    const ModelSpec spec{p.layer_dims, p.pool.tau};
    spec.validate();
    if (p.pool.p != static_cast<int>(p.pool.start_layers.size()))
        throw std::runtime_error("config: \"pool.p\" must equal the number of start_layers");
    try {
        (void)build_pool(spec, p.pool.level_ratios, p.pool.start_layers);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("config: ") + e.what());
    }
    p.scenario.validate();
    if (p.data.file.empty()) {
        if (p.data.features != spec.input_dim())
            throw std::runtime_error("config: \"data.features\" must equal the first layer dim");
        if (p.data.classes != spec.num_classes())
            throw std::runtime_error("config: \"data.classes\" must equal the last layer dim");
    }
}

}  // namespace

ExperimentConfigFile parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error("config: " + path + " is not valid JSON: " + e.what());
    }
    check_keys(j, "", {"seed", "out_dir", "model", "pool", "train", "scenario", "data"});
    if (!j.contains("seed"))
        throw std::runtime_error("config: missing required key \"seed\"");

    ExperimentConfigFile cfg;
    read(j, "", "seed", cfg.params.seed);
    read(j, "", "out_dir", cfg.out_dir);
    if (j.contains("model")) parse_model(j.at("model"), cfg.params);
    if (j.contains("pool")) parse_pool(j.at("pool"), cfg.params);
    if (j.contains("train")) parse_train(j.at("train"), cfg.params);
    if (j.contains("scenario")) parse_scenario(j.at("scenario"), cfg.params);
    if (j.contains("data")) parse_data(j.at("data"), cfg.params);
    revalidate(cfg.params);
    return cfg;
}

std::string config_to_json(const ExperimentConfigFile& cfg) {
    const ExperimentParams& p = cfg.params;
    json j;
    j["seed"] = p.seed;
    j["out_dir"] = cfg.out_dir;
    j["model"] = {{"layer_dims", p.layer_dims}, {"activation", "relu"}};
    json ratios;
    for (const auto& [lv, r] : p.pool.level_ratios) ratios[level_name(lv)] = r;
    j["pool"] = {{"p", p.pool.p},
                 {"level_ratios", ratios},
                 {"start_layers", p.pool.start_layers},
                 {"tau", p.pool.tau}};
    j["train"] = {{"learning_rate", p.train.learning_rate},
                  {"momentum", p.train.momentum},
                  {"batch_size", p.train.batch_size},
                  {"local_epochs", p.train.local_epochs}};
    j["scenario"] = {{"n_clients", p.scenario.n_clients},
                     {"clients_per_round", p.scenario.clients_per_round},
                     {"proportions", p.scenario.proportions},
                     {"alpha", p.scenario.alpha},
                     {"iid", p.scenario.iid},
                     {"rounds", p.scenario.rounds},
                     {"strategy", strategy_name(p.scenario.strategy)}};
    j["data"] = {{"classes", p.data.classes},
                 {"features", p.data.features},
                 {"train_samples", p.data.train_samples},
                 {"test_samples", p.data.test_samples},
                 {"cluster_std", p.data.cluster_std}};
    if (!p.data.file.empty()) j["data"]["file"] = p.data.file;
    return j.dump(2) + "\n";
}

void write_config_echo(const ExperimentConfigFile& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    const auto path = std::filesystem::path(cfg.out_dir) / "config.json";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write " + path.string());
    out << config_to_json(cfg);
}

}  // namespace adaptivefl
