// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace subgeo::cli {

/// One (prior task i, trained task t) pair of one run; the unit of the
/// records.csv interchange format.
struct CsvRecord {
    int run_id = 0;
    std::uint64_t seed = 0;
    int rank = 0;
    int task_i = 0;
    int task_t = 0;
    double theta_min_measured = 0.0;
    double theta_min_prescribed = 0.0;
    double interference = 0.0;
    double forgetting_immediate = 0.0;
    double forgetting_cumulative = 0.0;
    double update_norm = 0.0;
    double effective_rank = 0.0;
    std::string strategy;
};

inline constexpr const char* kCsvHeader =
    "run_id,seed,rank,task_i,task_t,theta_min_measured,theta_min_prescribed,interference,"
    "forgetting_immediate,forgetting_cumulative,update_norm,effective_rank,strategy";

/// Serializes records sorted by (run_id, task_t, task_i), decimals with 12
/// significant digits, LF line endings.
std::string csv_to_string(std::vector<CsvRecord> records);

/// csv_to_string written to disk (UTF-8, byte-stable across reruns).
void emit_csv(const std::vector<CsvRecord>& records, const std::string& path);

/// Parses a records.csv produced by emit_csv; rejects any other header.
std::vector<CsvRecord> parse_csv(const std::string& text);

} // namespace subgeo::cli
