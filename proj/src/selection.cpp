#include "adaptivefl/selection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adaptivefl/rng.hpp"

namespace adaptivefl {

double resource_reward(int pool_index, int client, const ResourceTable& t_r,
                       const ModelPool& pool) {
    const std::int64_t total = t_r.column_total(client);
    if (total <= 0) return 0.0;   // client has demonstrated no capability

    const Level level = pool.entries.at(pool_index).level;
    std::int64_t numerator = 0;
    for (int k = 0; k < pool.count(); ++k) {
        if (pool.entries[k].level != level) continue;
        for (int t = k; t < t_r.rows; ++t) numerator += t_r.at(t, client);
    }
    return static_cast<double>(numerator) / (static_cast<double>(pool.p) * static_cast<double>(total));
}

double curiosity_reward(Level level, int client, const CuriosityTable& t_c) {
    return 1.0 / std::sqrt(static_cast<double>(t_c.at(level, client)));
}

double combined_reward(int pool_index, int client, const CuriosityTable& t_c,
                       const ResourceTable& t_r, const ModelPool& pool) {
    const double rs = resource_reward(pool_index, client, t_r, pool);
    const double rc = curiosity_reward(pool.entries.at(pool_index).level, client, t_c);
    return std::min(0.5, rs) * rc;
}

std::vector<double> normalize_rewards(const std::vector<double>& rewards) {
    double total = 0.0;
    for (double r : rewards) {
        if (r < 0.0) throw std::invalid_argument("normalize_rewards: negative reward");
        total += r;
    }
    std::vector<double> probs(rewards.size());
    if (total <= 0.0) {
        const double u = 1.0 / static_cast<double>(rewards.size());
        std::fill(probs.begin(), probs.end(), u);
    } else {
        for (std::size_t i = 0; i < rewards.size(); ++i) probs[i] = rewards[i] / total;
    }
    return probs;
}

std::vector<double> selection_probabilities(int pool_index, const std::vector<int>& eligible,
                                            const CuriosityTable& t_c, const ResourceTable& t_r,
                                            const ModelPool& pool, RewardMode mode) {
    if (eligible.empty())
        throw std::invalid_argument("selection_probabilities: no eligible clients");
    std::vector<double> rewards(eligible.size());
    for (std::size_t i = 0; i < eligible.size(); ++i) {
        const int c = eligible[i];
        switch (mode) {
            case RewardMode::combined:
                rewards[i] = combined_reward(pool_index, c, t_c, t_r, pool);
                break;
            case RewardMode::curiosity_only:
                rewards[i] = curiosity_reward(pool.entries.at(pool_index).level, c, t_c);
                break;
            case RewardMode::resource_only:
                rewards[i] = resource_reward(pool_index, c, t_r, pool);
                break;
            case RewardMode::uniform:
                rewards[i] = 1.0;
                break;
        }
    }
    return normalize_rewards(rewards);
}

std::vector<int> select_clients(const std::vector<int>& dispatch_list,
                                const std::vector<int>& eligible, const CuriosityTable& t_c,
                                const ResourceTable& t_r, const ModelPool& pool, RewardMode mode,
                                std::mt19937_64& rng) {
    if (eligible.size() < dispatch_list.size())
        throw std::invalid_argument("select_clients: fewer eligible clients than dispatches");

    std::vector<int> remaining = eligible;
    std::vector<int> chosen;
    chosen.reserve(dispatch_list.size());
    for (int pool_index : dispatch_list) {
        const auto probs = selection_probabilities(pool_index, remaining, t_c, t_r, pool, mode);
        const double u = uniform01(rng);
        double acc = 0.0;
        std::size_t pick = probs.size() - 1;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) {
                pick = i;
                break;
            }
        }
        chosen.push_back(remaining[pick]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return chosen;
}

void update_tables(int sent_index, int returned_index, int client, CuriosityTable& t_c,
                   ResourceTable& t_r, const ModelPool& pool) {
    if (t_r.rows != pool.count())
        throw std::invalid_argument("update_tables: resource table rows do not match the pool");
    if (sent_index < 0 || sent_index >= pool.count() || returned_index < 0 ||
        returned_index >= pool.count())
        throw std::invalid_argument("update_tables: pool index out of range");
    if (returned_index != sent_index &&
        !is_subslice(pool.entries[returned_index], pool.entries[sent_index], pool.spec))
        throw std::invalid_argument("update_tables: returned model is not a sub-slice of the sent model");

    t_c.at(pool.entries[sent_index].level, client) += 1;
    t_c.at(pool.entries[returned_index].level, client) += 1;

    const int top = t_r.rows - 1;   // m_L1
    if (returned_index == sent_index) {
        for (int t = sent_index; t <= top; ++t) t_r.at(t, client) += 1;
        t_r.at(top, client) += pool.p - 1;
    } else {
        t_r.at(returned_index, client) += pool.p;
        std::int64_t penalty = 0;
        for (int t = returned_index; t <= top; ++t) {
            t_r.at(t, client) = std::max<std::int64_t>(t_r.at(t, client) - penalty, 0);
            ++penalty;
        }
    }
}

}  // namespace adaptivefl
