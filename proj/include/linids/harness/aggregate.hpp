#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "linids/harness/runner.hpp"

namespace linids::harness {

/// Parses a trace CSV in the harness schema. Rows must be strictly increasing in t.
inline RegretTrace read_trace_csv(std::istream& in, const std::string& source = "<stream>") {
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument(source + ": empty file");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != csv_header)
        throw std::invalid_argument(source + ":1: unexpected header '" + line + "'");

    RegretTrace tr;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            f.push_back(cell);
        if (f.size() != 9)
            throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": expected 9 fields, got " +
                                        std::to_string(f.size()));
        Checkpoint c;
        try {
            if (tr.checkpoints.empty()) {
                tr.algo = f[0];
                tr.instance = f[1];
                tr.seed = std::stoull(f[2]);
            } else if (f[0] != tr.algo) {
                throw std::invalid_argument("algorithm changes within one file");
            }
            c.t = std::stoull(f[3]);
            c.cum_regret = std::stod(f[4]);
            c.gamma = std::stod(f[5]);
            c.s_t = std::stoull(f[6]);
            c.exploit_rounds = std::stoull(f[7]);
            c.concentration_ok = f[8] == "1" || f[8] == "true";
        } catch (const std::exception& e) {
            throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!tr.checkpoints.empty() && c.t <= tr.checkpoints.back().t)
            throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": t is not increasing");
        tr.checkpoints.push_back(c);
    }
    if (tr.checkpoints.empty())
        throw std::invalid_argument(source + ": no data rows");
    return tr;
}

inline RegretTrace read_trace_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path.string() + "'");
    return read_trace_csv(in, path.string());
}

struct SummaryRow {
    std::string algo;
    std::size_t t = 0;
    double mean_regret = 0.0;
    double stderr_regret = 0.0;
    std::size_t reps = 0;
};

/// Per (algo, t) mean and standard error (sample std / sqrt(reps), 0 for a single trace).
inline std::vector<SummaryRow> aggregate(const std::vector<RegretTrace>& traces) {
    if (traces.empty())
        throw std::invalid_argument("aggregate needs at least one trace");
    std::map<std::string, std::vector<const RegretTrace*>> by_algo;
    for (const RegretTrace& tr : traces)
        by_algo[tr.algo].push_back(&tr);

    std::vector<SummaryRow> rows;
    for (const auto& [algo, group] : by_algo) {
        const auto& ref = group.front()->checkpoints;
        for (const RegretTrace* tr : group) {
            bool aligned = tr->checkpoints.size() == ref.size();
            for (std::size_t i = 0; aligned && i < ref.size(); ++i)
                aligned = tr->checkpoints[i].t == ref[i].t;
            if (!aligned)
                throw std::invalid_argument("checkpoint grids differ between traces of '" + algo + "'");
        }
        const double n = static_cast<double>(group.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            double mean = 0.0;
            for (const RegretTrace* tr : group)
                mean += tr->checkpoints[i].cum_regret;
            mean /= n;
            double ss = 0.0;
            for (const RegretTrace* tr : group) {
                const double dv = tr->checkpoints[i].cum_regret - mean;
                ss += dv * dv;
            }
            const double se = group.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
            rows.push_back({algo, ref[i].t, mean, se, group.size()});
        }
    }
    return rows;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::string out = "algo,t,mean_regret,stderr,reps\n";
    for (const SummaryRow& r : rows)
        out += r.algo + ',' + std::to_string(r.t) + ',' + format_number(r.mean_regret) + ',' +
               format_number(r.stderr_regret) + ',' + std::to_string(r.reps) + '\n';
    return out;
}

/// Trace CSVs in `dir`, sorted by file name (summary and sweep outputs are skipped).
inline std::vector<std::filesystem::path> trace_files(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("'" + dir.string() + "' is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto& p = entry.path();
        if (!entry.is_regular_file() || p.extension() != ".csv")
            continue;
        const auto name = p.filename().string();
        if (name == "summary.csv" || name == "sweep.csv")
            continue;
        files.push_back(p);
    }
    std::sort(files.begin(), files.end());
    return files;
}

/// Reads every trace in `dir`, writes summary.csv there and returns the rows.
inline std::vector<SummaryRow> aggregate_directory(const std::filesystem::path& dir) {
    std::vector<RegretTrace> traces;
    for (const auto& f : trace_files(dir))
        traces.push_back(read_trace_file(f));
    if (traces.empty())
        throw std::invalid_argument("no trace CSVs in '" + dir.string() + "'");
    auto rows = aggregate(traces);
    write_text_file(dir / "summary.csv", summary_csv(rows));
    return rows;
}

} // namespace linids::harness
