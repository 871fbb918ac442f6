#include "adaptivefl/federation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "adaptivefl/rng.hpp"

namespace adaptivefl {

Strategy strategy_from_name(const std::string& name) {
    if (name == "adaptivefl") return Strategy::adaptivefl;
    if (name == "curiosity") return Strategy::curiosity_only;
    if (name == "resource") return Strategy::resource_only;
    if (name == "random") return Strategy::random_sel;
    if (name == "greedy") return Strategy::greedy;
    if (name == "all-large") return Strategy::all_large;
    if (name == "decoupled") return Strategy::decoupled;
    throw std::invalid_argument("unknown strategy '" + name + "'");
}

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::adaptivefl: return "adaptivefl";
        case Strategy::curiosity_only: return "curiosity";
        case Strategy::resource_only: return "resource";
        case Strategy::random_sel: return "random";
        case Strategy::greedy: return "greedy";
        case Strategy::all_large: return "all-large";
        case Strategy::decoupled: return "decoupled";
    }
    return "?";
}

void Scenario::validate() const {
    if (n_clients < 1) throw std::invalid_argument("Scenario: n_clients must be >= 1");
    if (clients_per_round < 1 || clients_per_round > n_clients)
        throw std::invalid_argument("Scenario: clients_per_round must be in [1, n_clients]");
    if (!iid && alpha <= 0.0) throw std::invalid_argument("Scenario: alpha must be > 0");
    if (rounds < 0) throw std::invalid_argument("Scenario: rounds must be >= 0");
    if (proportions[0] + proportions[1] + proportions[2] <= 0)
        throw std::invalid_argument("Scenario: proportions must sum to a positive value");
}

std::vector<std::vector<int>> partition_indices(const std::vector<int>& labels, int n_classes,
                                                int n_clients, double alpha, bool iid,
                                                std::mt19937_64& rng) {
    if (static_cast<int>(labels.size()) < n_clients)
        throw std::invalid_argument("partition_indices: fewer samples than clients");

    std::vector<std::vector<int>> by_class(n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class.at(labels[i]).push_back(static_cast<int>(i));

    std::vector<std::vector<int>> shards(n_clients);
    if (iid) {
        // Continuous round-robin deal across classes; per class every client
        // ends within one sample of the proportional share.
        std::size_t cursor = 0;
        for (auto& cls : by_class) {
            shuffle_in_place(cls, rng);
            for (int idx : cls) shards[cursor++ % n_clients].push_back(idx);
        }
        return shards;
    }

    const int max_retries = 100;
    std::gamma_distribution<double> gamma(alpha, 1.0);
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        for (auto& s : shards) s.clear();
        for (auto& cls : by_class) {
            shuffle_in_place(cls, rng);
            std::vector<double> weights(n_clients);
            double total = 0.0;
            for (double& w : weights) {
                w = gamma(rng);
                total += w;
            }
            if (total <= 0.0) {
                std::fill(weights.begin(), weights.end(), 1.0);
                total = static_cast<double>(n_clients);
            }
            // Largest-remainder allocation of this class's samples.
            const int n = static_cast<int>(cls.size());
            std::vector<int> counts(n_clients);
            std::vector<std::pair<double, int>> fracs(n_clients);
            int assigned = 0;
            for (int c = 0; c < n_clients; ++c) {
                const double share = weights[c] / total * n;
                counts[c] = static_cast<int>(std::floor(share));
                fracs[c] = {share - counts[c], c};
                assigned += counts[c];
            }
            std::stable_sort(fracs.begin(), fracs.end(),
                             [](const auto& a, const auto& b) { return a.first > b.first; });
            for (int r = 0; r < n - assigned; ++r) ++counts[fracs[r].second];
            int pos = 0;
            for (int c = 0; c < n_clients; ++c)
                for (int j = 0; j < counts[c]; ++j) shards[c].push_back(cls[pos++]);
        }
        const bool ok = std::none_of(shards.begin(), shards.end(),
                                     [](const auto& s) { return s.empty(); });
        if (ok) return shards;
    }
    throw std::runtime_error("partition_indices: could not produce nonempty shards within " +
                             std::to_string(max_retries) + " attempts");
}

double comm_waste_rate(std::int64_t total_sent, std::int64_t total_returned) {
    if (total_sent <= 0) throw std::invalid_argument("comm_waste_rate: no dispatches");
    return 1.0 - static_cast<double>(total_returned) / static_cast<double>(total_sent);
}

double comm_waste_rate(const std::vector<DispatchRecord>& history) {
    std::int64_t sent = 0, returned = 0;
    for (const auto& d : history) {
        sent += d.size_sent;
        returned += d.size_returned;
    }
    return comm_waste_rate(sent, returned);
}

namespace {

std::array<int, 3> strength_counts(const Scenario& sc) {
    const double total = sc.proportions[0] + sc.proportions[1] + sc.proportions[2];
    std::array<int, 3> counts{};
    std::array<double, 3> shares{};
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        shares[i] = sc.proportions[i] / total * sc.n_clients;
        counts[i] = static_cast<int>(std::floor(shares[i]));
        assigned += counts[i];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return shares[a] - std::floor(shares[a]) > shares[b] - std::floor(shares[b]);
    });
    for (int r = 0; r < sc.n_clients - assigned; ++r) ++counts[order[r]];
    return counts;
}

// Capacity bands realizing the accommodation semantics: weak holds every S
// entry and no M entry, medium holds every M entry and not the full model,
// strong holds everything.
std::int64_t draw_capacity(Strength s, const ModelPool& pool, std::mt19937_64& rng) {
    const int p = pool.p;
    const std::int64_t s1 = pool.sizes[p - 1];
    const std::int64_t mp = pool.sizes[p];
    const std::int64_t m1 = pool.sizes[2 * p - 1];
    const std::int64_t l1 = pool.sizes[2 * p];
    std::int64_t lo = 0, hi = 0;
    switch (s) {
        case Strength::weak: lo = s1; hi = mp; break;
        case Strength::medium: lo = m1; hi = l1; break;
        case Strength::strong: lo = l1; hi = l1 + l1 / 4 + 1; break;
    }
    return lo + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo)));
}

int pool_index_of(const ModelPool& pool, const PruneConfig& cfg) {
    return pool.index_of(cfg.level, cfg.variant);
}

// Level representatives: indices of S_1, M_1, L_1.
int rep_index(const ModelPool& pool, Level level) {
    if (level == Level::L) return pool.full_index();
    return pool.index_of(level, 1);
}

}  // namespace

ExperimentState build_experiment_state(const ExperimentParams& params) {
    params.scenario.validate();

    ExperimentState st;
    st.spec = ModelSpec{params.layer_dims, params.pool.tau};
    st.spec.validate();
    if (params.pool.p != static_cast<int>(params.pool.start_layers.size()))
        throw std::invalid_argument("ExperimentParams: p must equal the number of start_layers");
    st.pool = build_pool(st.spec, params.pool.level_ratios, params.pool.start_layers);
    st.train = params.train;
    st.scenario = params.scenario;
    st.rng.seed(params.seed);

    // Data: synthetic clusters by default, file-backed when configured.
    Dataset train_set, test_set;
    if (!params.data.file.empty()) {
        const Dataset all = load_dataset(params.data.file);
        const int n_test = std::min<int>(params.data.test_samples,
                                         static_cast<int>(all.size()) / 5);
        const int n_train = static_cast<int>(all.size()) - n_test;
        if (n_train < 1 || n_test < 1)
            throw std::invalid_argument("ExperimentParams: dataset file too small to split");
        std::vector<int> train_idx(n_train), test_idx(n_test);
        std::iota(train_idx.begin(), train_idx.end(), 0);
        std::iota(test_idx.begin(), test_idx.end(), n_train);
        const Batch tr = subset_batch(all, train_idx);
        const Batch te = subset_batch(all, test_idx);
        train_set = Dataset{tr.features, tr.labels, all.n_classes};
        test_set = Dataset{te.features, te.labels, all.n_classes};
    } else {
        const Matrix means = synthetic_means(params.data.classes, params.data.features, st.rng);
        train_set = make_synthetic(means, params.data.train_samples, params.data.cluster_std, st.rng);
        test_set = make_synthetic(means, params.data.test_samples, params.data.cluster_std, st.rng);
    }
    if (static_cast<int>(train_set.features.cols()) != st.spec.input_dim() ||
        train_set.n_classes != st.spec.num_classes())
        throw std::invalid_argument("ExperimentParams: dataset dims do not match layer_dims");
    st.test_set = to_batch(test_set);

    const auto shards = partition_indices(train_set.labels, train_set.n_classes,
                                          st.scenario.n_clients, st.scenario.alpha,
                                          st.scenario.iid, st.rng);

    const auto counts = strength_counts(st.scenario);
    st.clients.reserve(st.scenario.n_clients);
    int next_id = 0;
    for (int s = 0; s < 3; ++s)
        for (int i = 0; i < counts[s]; ++i) {
            ClientState c;
            c.id = next_id;
            c.strength = static_cast<Strength>(s);
            c.capacity = draw_capacity(c.strength, st.pool, st.rng);
            c.shard = subset_batch(train_set, shards[next_id]);
            c.data_size = static_cast<std::int64_t>(c.shard.size());
            st.clients.push_back(std::move(c));
            ++next_id;
        }

    st.global = init_params(st.spec, st.rng());
    if (st.scenario.strategy == Strategy::decoupled)
        for (Level lv : {Level::S, Level::M, Level::L})
            st.level_models.push_back(prune_params(st.global, st.pool.entries[rep_index(st.pool, lv)],
                                                   st.spec));

    st.t_c = CuriosityTable(st.scenario.n_clients);
    st.t_r = ResourceTable(st.pool.count(), st.scenario.n_clients);
    return st;
}

namespace {

RewardMode client_selection_mode(Strategy s) {
    switch (s) {
        case Strategy::adaptivefl:
        case Strategy::greedy: return RewardMode::combined;
        case Strategy::curiosity_only: return RewardMode::curiosity_only;
        case Strategy::resource_only: return RewardMode::resource_only;
        default: return RewardMode::uniform;
    }
}

RoundRecord run_decoupled_round(ExperimentState& st, int round_index) {
    const int K = st.scenario.clients_per_round;
    std::vector<int> eligible(st.clients.size());
    std::iota(eligible.begin(), eligible.end(), 0);
    std::vector<int> picked = select_clients(std::vector<int>(K, st.pool.full_index()), eligible,
                                             st.t_c, st.t_r, st.pool, RewardMode::uniform, st.rng);

    RoundRecord rec;
    rec.round = round_index;
    // Each strength class forms its own population training one level; no
    // parameters cross levels.
    std::array<std::vector<ReturnedModel>, 3> returns;
    for (int c : picked) {
        const ClientState& client = st.clients[c];
        const int lv = static_cast<int>(client.strength);
        const Level level = static_cast<Level>(lv);
        const int rep = rep_index(st.pool, level);

        TrainConfig cfg = st.train;
        cfg.seed = st.rng();
        ParamSet trained = local_train(st.level_models[lv], client.shard, cfg);
        returns[lv].push_back({std::move(trained), st.pool.entries[rep], client.data_size, client.id});

        rec.dispatches.push_back({rep, rep, client.id, st.pool.sizes[rep], st.pool.sizes[rep]});
        st.total_sent += st.pool.sizes[rep];
        st.total_returned += st.pool.sizes[rep];
    }
    for (int lv = 0; lv < 3; ++lv)
        if (!returns[lv].empty())
            st.level_models[lv] = aggregate(st.level_models[lv], returns[lv], st.spec);

    rec.acc_s1 = evaluate(st.level_models[0], st.test_set);
    rec.acc_m1 = evaluate(st.level_models[1], st.test_set);
    rec.acc_l1 = evaluate(st.level_models[2], st.test_set);
    rec.acc_full = rec.acc_l1;
    rec.waste_to_date = comm_waste_rate(st.total_sent, st.total_returned);
    rec.t_c = st.t_c;
    rec.t_r = st.t_r;
    return rec;
}

}  // namespace

RoundRecord run_round(ExperimentState& st, int round_index) {
    if (st.scenario.strategy == Strategy::decoupled) return run_decoupled_round(st, round_index);

    const int K = st.scenario.clients_per_round;
    const bool fixed_full = st.scenario.strategy == Strategy::greedy ||
                            st.scenario.strategy == Strategy::all_large;

    std::vector<int> dispatch(K);
    for (int i = 0; i < K; ++i)
        dispatch[i] = fixed_full ? st.pool.full_index()
                                 : static_cast<int>(uniform_index(st.rng, st.pool.count()));

    std::vector<int> eligible(st.clients.size());
    std::iota(eligible.begin(), eligible.end(), 0);
    const std::vector<int> picked =
        select_clients(dispatch, eligible, st.t_c, st.t_r, st.pool,
                       client_selection_mode(st.scenario.strategy), st.rng);

    RoundRecord rec;
    rec.round = round_index;
    std::vector<ReturnedModel> returns;
    returns.reserve(K);
    for (int i = 0; i < K; ++i) {
        const ClientState& client = st.clients[picked[i]];
        const PruneConfig& sent = st.pool.entries[dispatch[i]];
        // The device prunes the received model to its available budget;
        // the classic-FedAvg baseline trains the full model regardless.
        const PruneConfig fitted = st.scenario.strategy == Strategy::all_large
                                       ? sent
                                       : fit_to_budget(sent, client.capacity, st.pool, st.spec);
        const int fitted_index = pool_index_of(st.pool, fitted);

        TrainConfig cfg = st.train;
        cfg.seed = st.rng();
        ParamSet local = prune_params(st.global, fitted, st.spec);
        ParamSet trained = local_train(local, client.shard, cfg);
        returns.push_back({std::move(trained), fitted, client.data_size, client.id});

        rec.dispatches.push_back({dispatch[i], fitted_index, client.id,
                                  st.pool.sizes[dispatch[i]], st.pool.sizes[fitted_index]});
        st.total_sent += st.pool.sizes[dispatch[i]];
        st.total_returned += st.pool.sizes[fitted_index];
    }

    // Updates and aggregation run after all clients returned, in ascending
    // client id.
    std::vector<std::size_t> order(rec.dispatches.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return rec.dispatches[a].client_id < rec.dispatches[b].client_id;
    });
    for (std::size_t i : order)
        update_tables(rec.dispatches[i].sent_index, rec.dispatches[i].returned_index,
                      rec.dispatches[i].client_id, st.t_c, st.t_r, st.pool);

    st.global = aggregate(st.global, returns, st.spec);

    rec.acc_full = evaluate(st.global, st.test_set);
    rec.acc_l1 = rec.acc_full;   // the L_1 entry is the global model itself
    rec.acc_m1 = evaluate(prune_params(st.global, st.pool.entries[rep_index(st.pool, Level::M)],
                                       st.spec), st.test_set);
    rec.acc_s1 = evaluate(prune_params(st.global, st.pool.entries[rep_index(st.pool, Level::S)],
                                       st.spec), st.test_set);
    rec.waste_to_date = comm_waste_rate(st.total_sent, st.total_returned);
    rec.t_c = st.t_c;
    rec.t_r = st.t_r;
    return rec;
}

std::vector<RoundRecord> run_experiment(const ExperimentParams& params) {
    ExperimentState st = build_experiment_state(params);
    std::vector<RoundRecord> records;
    records.reserve(params.scenario.rounds);
    for (int r = 0; r < params.scenario.rounds; ++r) records.push_back(run_round(st, r));
    return records;
}

}  // namespace adaptivefl
