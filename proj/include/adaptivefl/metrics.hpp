#pragma once

#include <string>
#include <vector>

#include "adaptivefl/federation.hpp"

namespace adaptivefl {

/// Writes metrics.csv (round, acc_full, acc_L1, acc_M1, acc_S1, acc_avg,
/// waste_rate) and rounds.jsonl (one record per round mirroring RoundRecord,
/// tables included) into out_dir. Reruns of the same seeded experiment
/// produce byte-identical files.
void emit_metrics(const std::vector<RoundRecord>& records, const std::string& out_dir);

}  // namespace adaptivefl
