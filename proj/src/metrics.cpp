#include "adaptivefl/metrics.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace adaptivefl {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

nlohmann::json table_rows(const std::vector<std::int64_t>& flat, int rows, int cols) {
    nlohmann::json out = nlohmann::json::array();
    for (int r = 0; r < rows; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < cols; ++c) row.push_back(flat[static_cast<std::size_t>(r) * cols + c]);
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace

void emit_metrics(const std::vector<RoundRecord>& records, const std::string& out_dir) {
    if (records.empty()) throw std::invalid_argument("emit_metrics: no records");
    std::filesystem::create_directories(out_dir);

    const auto csv_path = std::filesystem::path(out_dir) / "metrics.csv";
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("emit_metrics: cannot write " + csv_path.string());
    csv << "round,acc_full,acc_L1,acc_M1,acc_S1,acc_avg,waste_rate\n";
    for (const auto& r : records) {
        const double avg = (r.acc_l1 + r.acc_m1 + r.acc_s1) / 3.0;
        csv << r.round << "," << fmt(r.acc_full) << "," << fmt(r.acc_l1) << "," << fmt(r.acc_m1)
            << "," << fmt(r.acc_s1) << "," << fmt(avg) << "," << fmt(r.waste_to_date) << "\n";
    }

    const auto jsonl_path = std::filesystem::path(out_dir) / "rounds.jsonl";
    std::ofstream jsonl(jsonl_path);
    if (!jsonl) throw std::runtime_error("emit_metrics: cannot write " + jsonl_path.string());
    for (const auto& r : records) {
        nlohmann::json j;
        j["round"] = r.round;
        j["acc_full"] = r.acc_full;
        j["acc_l1"] = r.acc_l1;
        j["acc_m1"] = r.acc_m1;
        j["acc_s1"] = r.acc_s1;
        j["waste_to_date"] = r.waste_to_date;
        nlohmann::json ds = nlohmann::json::array();
        for (const auto& d : r.dispatches)
            ds.push_back({{"sent_index", d.sent_index},
                          {"returned_index", d.returned_index},
                          {"client_id", d.client_id},
                          {"size_sent", d.size_sent},
                          {"size_returned", d.size_returned}});
        j["dispatches"] = std::move(ds);
        j["t_c"] = table_rows(r.t_c.counts, 3, r.t_c.n_clients);
        j["t_r"] = table_rows(r.t_r.scores, r.t_r.rows, r.t_r.n_clients);
        jsonl << j.dump() << "\n";
    }
}

}  // namespace adaptivefl
