#pragma once

// Report writers: per-scenario CSV and a combined JSON summary. Files are
// written atomically (temp + rename) so failed runs leave no partial output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "wrf/common.hpp"
#include "wrf/harness.hpp"
#include "wrf/scenario_json.hpp"

namespace wrf {

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail("cannot write " + tmp.string());
        out << content;
        if (!out) fail("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

}  // namespace detail

inline std::string comparison_csv(const Report& r) {
    std::string out = "x,delta,value,residual_bound,n_max,method,predicted,ratio,pass\n";
    for (const auto& row : r.rows) {
        out += detail::fmt_double(row.x);
        out += ',';
        out += detail::fmt_double(r.delta);
        out += ',';
        out += detail::fmt_double(row.exact);
        out += ',';
        out += detail::fmt_double(row.error);
        out += ',';
        out += std::to_string(row.n_max);
        out += ',';
        out += row.method;
        out += ',';
        out += detail::fmt_double(row.predicted);
        out += ',';
        out += detail::fmt_double(row.ratio);
        out += ',';
        out += row.pass ? "1" : "0";
        out += '\n';
    }
    return out;
}

inline std::string scan_csv(const std::vector<ScanRow>& rows) {
    std::string out = "n,sup_error\n";
    for (const auto& r : rows) {
        out += std::to_string(r.n);
        out += ',';
        out += detail::fmt_double(r.eps);
        out += '\n';
    }
    return out;
}

inline void write_report_csv(const std::string& path, const Report& r) {
    detail::atomic_write(path, comparison_csv(r));
}

inline void write_summary_json(const std::string& path, const std::vector<Report>& reports) {
    json scenarios = json::array();
    bool all = true;
    for (const auto& r : reports) {
        scenarios.push_back(summary_json(r));
        all = all && r.all_pass;
    }
    json j{{"scenarios", scenarios}, {"all_pass", all}};
    detail::atomic_write(path, j.dump(2) + "\n");
}

}  // namespace wrf
