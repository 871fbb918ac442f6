#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "adaptivefl/pruning.hpp"

namespace adaptivefl {

/// Per-(level, client) dispatch counts driving the exploration bonus.
/// Initialized to all ones; entries only ever increase.
struct CuriosityTable {
    int n_clients = 0;
    std::vector<std::int64_t> counts;   // 3 x n_clients

    explicit CuriosityTable(int clients = 0)
        : n_clients(clients), counts(static_cast<std::size_t>(3) * clients, 1) {}

    std::int64_t& at(Level level, int client) {
        return counts[static_cast<std::size_t>(level) * n_clients + client];
    }
    std::int64_t at(Level level, int client) const {
        return counts[static_cast<std::size_t>(level) * n_clients + client];
    }
};

/// Per-(pool entry, client) training scores encoding inferred capacity.
/// Initialized to all ones; the penalty rule floors entries at zero.
struct ResourceTable {
    int rows = 0;          // 2p+1, row 0 = m_Sp ... row 2p = m_L1
    int n_clients = 0;
    std::vector<std::int64_t> scores;

    ResourceTable(int pool_rows = 0, int clients = 0)
        : rows(pool_rows), n_clients(clients),
          scores(static_cast<std::size_t>(pool_rows) * clients, 1) {}

    std::int64_t& at(int row, int client) {
        return scores[static_cast<std::size_t>(row) * n_clients + client];
    }
    std::int64_t at(int row, int client) const {
        return scores[static_cast<std::size_t>(row) * n_clients + client];
    }

    std::int64_t column_total(int client) const {
        std::int64_t t = 0;
        for (int r = 0; r < rows; ++r) t += at(r, client);
        return t;
    }
};

/// Which reward drives the categorical selection distribution.
enum class RewardMode { combined, curiosity_only, resource_only, uniform };

/// R_s: for each variant row k of the entry's level, the scores from row k
/// up to the top row are summed; the denominator is p times the column
/// total. A zeroed column yields reward 0.
double resource_reward(int pool_index, int client, const ResourceTable& t_r,
                       const ModelPool& pool);

/// R_c = 1 / sqrt(selection count of this level on this client).
double curiosity_reward(Level level, int client, const CuriosityTable& t_c);

/// R = min(0.5, R_s) * R_c. The success-rate cap hands clients beyond 50%
/// over to the exploration bonus.
double combined_reward(int pool_index, int client, const CuriosityTable& t_c,
                       const ResourceTable& t_r, const ModelPool& pool);

/// Normalizes nonnegative rewards into a probability vector; an all-zero
/// reward vector falls back to the uniform distribution.
std::vector<double> normalize_rewards(const std::vector<double>& rewards);

/// P(m_i, c) over the eligible clients for one pool entry.
std::vector<double> selection_probabilities(int pool_index, const std::vector<int>& eligible,
                                            const CuriosityTable& t_c, const ResourceTable& t_r,
                                            const ModelPool& pool,
                                            RewardMode mode = RewardMode::combined);

/// One client per dispatched model, sampled without replacement across the
/// round: each draw removes the chosen client and renormalizes over the
/// remainder. Deterministic given the rng state.
std::vector<int> select_clients(const std::vector<int>& dispatch_list,
                                const std::vector<int>& eligible, const CuriosityTable& t_c,
                                const ResourceTable& t_r, const ModelPool& pool, RewardMode mode,
                                std::mt19937_64& rng);

/// Table updates for one dispatch: both the sent and returned levels gain a
/// selection count; the resource column gets the increment rule when the
/// model came back unpruned, otherwise the bonus-plus-penalty rule. The
/// returned entry must be the sent entry or a sub-slice of it.
void update_tables(int sent_index, int returned_index, int client, CuriosityTable& t_c,
                   ResourceTable& t_r, const ModelPool& pool);

}  // namespace adaptivefl
