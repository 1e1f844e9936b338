// SPDX-License-Identifier: Apache-2.0
#include "subgeo/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "subgeo/errors.hpp"

namespace subgeo::cli {

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    return out;
}

} // namespace

std::string csv_to_string(std::vector<CsvRecord> records) {
    if (records.empty()) throw DimError("emit_csv: no records");
    std::sort(records.begin(), records.end(), [](const CsvRecord& a, const CsvRecord& b) {
        return std::tie(a.run_id, a.task_t, a.task_i) < std::tie(b.run_id, b.task_t, b.task_i);
    });
    std::string out(kCsvHeader);
    out.push_back('\n');
    for (const CsvRecord& r : records) {
        out += std::to_string(r.run_id);
        out.push_back(',');
        out += std::to_string(r.seed);
        out.push_back(',');
        out += std::to_string(r.rank);
        out.push_back(',');
        out += std::to_string(r.task_i);
        out.push_back(',');
        out += std::to_string(r.task_t);
        out.push_back(',');
        out += fmt(r.theta_min_measured);
        out.push_back(',');
        out += fmt(r.theta_min_prescribed);
        out.push_back(',');
        out += fmt(r.interference);
        out.push_back(',');
        out += fmt(r.forgetting_immediate);
        out.push_back(',');
        out += fmt(r.forgetting_cumulative);
        out.push_back(',');
        out += fmt(r.update_norm);
        out.push_back(',');
        out += fmt(r.effective_rank);
        out.push_back(',');
        out += r.strategy;
        out.push_back('\n');
    }
    return out;
}

void emit_csv(const std::vector<CsvRecord>& records, const std::string& path) {
    const std::string body = csv_to_string(records);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<CsvRecord> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw ConfigError("records csv: unexpected header", "header");
    }
    std::vector<CsvRecord> records;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 13) {
            throw ConfigError("records csv: line " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields, expected 13",
                              "row");
        }
        CsvRecord r;
        try {
            r.run_id = std::stoi(fields[0]);
            r.seed = std::stoull(fields[1]);
            r.rank = std::stoi(fields[2]);
            r.task_i = std::stoi(fields[3]);
            r.task_t = std::stoi(fields[4]);
            r.theta_min_measured = std::stod(fields[5]);
            r.theta_min_prescribed = std::stod(fields[6]);
            r.interference = std::stod(fields[7]);
            r.forgetting_immediate = std::stod(fields[8]);
            r.forgetting_cumulative = std::stod(fields[9]);
            r.update_norm = std::stod(fields[10]);
            r.effective_rank = std::stod(fields[11]);
        } catch (const std::exception&) {
            throw ConfigError("records csv: unparseable number on line " + std::to_string(line_no), "row");
        }
        r.strategy = fields[12];
        records.push_back(std::move(r));
    }
    return records;
}

} // namespace subgeo::cli
