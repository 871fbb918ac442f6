#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "adaptivefl/aggregation.hpp"
#include "adaptivefl/dataset.hpp"
#include "adaptivefl/nn.hpp"
#include "adaptivefl/pruning.hpp"
#include "adaptivefl/selection.hpp"

namespace adaptivefl {

enum class Strength { weak = 0, medium = 1, strong = 2 };

/// A simulated device: identity, parameter budget, local shard.
struct ClientState {
    int id = 0;
    Strength strength = Strength::weak;
    std::int64_t capacity = 0;      // largest trainable scalar count
    Batch shard;
    std::int64_t data_size = 0;     // |d_c|
};

enum class Strategy {
    adaptivefl,       // RandomSel models, combined-reward client selection (+CS)
    curiosity_only,   // +C
    resource_only,    // +S
    random_sel,       // uniform client selection
    greedy,           // always dispatch the full model, +CS clients
    all_large,        // classic FedAvg: full model, uniform clients, no budget fitting
    decoupled,        // independent per-level populations, no cross-level sharing
};

Strategy strategy_from_name(const std::string& name);
std::string strategy_name(Strategy s);

struct Scenario {
    int n_clients = 20;
    int clients_per_round = 5;                  // K
    std::array<int, 3> proportions{4, 3, 3};    // weak : medium : strong
    double alpha = 0.5;                         // Dirichlet concentration
    bool iid = false;
    int rounds = 100;
    Strategy strategy = Strategy::adaptivefl;

    void validate() const;
};

/// Synthetic data settings; `file` switches to a dataset file instead.
struct DataConfig {
    int classes = 8;
    int features = 16;
    int train_samples = 3000;
    int test_samples = 500;
    double cluster_std = 1.5;
    std::string file;               // empty = synthetic
};

struct PoolConfig {
    int p = 3;
    std::map<Level, double> level_ratios{{Level::S, 0.40}, {Level::M, 0.66}};
    std::vector<int> start_layers{3, 2, 1};
    int tau = 1;
};

/// Everything run_experiment needs; the master seed fixes every bit of the run.
struct ExperimentParams {
    std::vector<int> layer_dims{16, 24, 24, 24, 96, 8};
    PoolConfig pool;
    TrainConfig train;
    Scenario scenario;
    DataConfig data;
    std::uint64_t seed = 0;
};

struct DispatchRecord {
    int sent_index = 0;
    int returned_index = 0;
    int client_id = 0;
    std::int64_t size_sent = 0;
    std::int64_t size_returned = 0;
};

struct RoundRecord {
    int round = 0;
    std::vector<DispatchRecord> dispatches;
    double acc_full = 0.0;
    double acc_l1 = 0.0;
    double acc_m1 = 0.0;
    double acc_s1 = 0.0;
    double waste_to_date = 0.0;
    CuriosityTable t_c{0};
    ResourceTable t_r{0, 0};
};

/// Mutable run state owned by the orchestration loop.
struct ExperimentState {
    ModelSpec spec;
    ModelPool pool;
    TrainConfig train;
    Scenario scenario;
    std::vector<ClientState> clients;
    Batch test_set;
    ParamSet global;                       // pool-based strategies
    std::vector<ParamSet> level_models;    // decoupled: S, M, L representatives
    CuriosityTable t_c{0};
    ResourceTable t_r{0, 0};
    std::int64_t total_sent = 0;
    std::int64_t total_returned = 0;
    std::mt19937_64 rng;
};

/// Splits sample indices into per-client shards. With `iid` set, each class
/// is dealt round-robin; otherwise per-class client proportions are drawn
/// from Dirichlet(alpha), redrawing (bounded) until no shard is empty.
/// Shards are disjoint and exhaustive.
std::vector<std::vector<int>> partition_indices(const std::vector<int>& labels, int n_classes,
                                                int n_clients, double alpha, bool iid,
                                                std::mt19937_64& rng);

/// 1 - sum(size returned) / sum(size sent) over the dispatch history.
double comm_waste_rate(const std::vector<DispatchRecord>& history);
double comm_waste_rate(std::int64_t total_sent, std::int64_t total_returned);

/// Builds the fully seeded starting state: dataset, shards, capacities,
/// initial parameters and all-ones tables.
ExperimentState build_experiment_state(const ExperimentParams& params);

/// One federated round: draw K pool entries, select clients per the
/// strategy, fit each dispatch to its client's budget, train locally,
/// update the tables and aggregate. Metrics are evaluated on the held-out
/// test set every round.
RoundRecord run_round(ExperimentState& state, int round_index);

/// Runs `scenario.rounds` rounds from a fresh state.
std::vector<RoundRecord> run_experiment(const ExperimentParams& params);

}  // namespace adaptivefl
