#pragma once

// CSV output and run manifests for the command-line tool.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rsma_sqp/errors.hpp"

namespace rsma_sqp::tool {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kCsvSchema = 1;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream o;
    o << std::hex << std::setw(16) << std::setfill('0') << v;
    return o.str();
}

/// Formats a double with round-trip precision; NaN as empty field.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream o;
    o << std::setprecision(17) << v;
    return o.str();
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void row(std::vector<std::string> cells) {
        if (cells.size() != header_.size()) throw DomainError("CSV row width does not match header");
        rows_.push_back(std::move(cells));
    }

    std::size_t size() const { return rows_.size(); }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    std::string render(const std::string& manifest_hash) const {
        std::ostringstream o;
        o << "# rsma-sqp schema=" << kCsvSchema << " manifest=" << manifest_hash << "\n";
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) o << (i ? "," : "") << csv_escape(cells[i]);
            o << "\n";
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return o.str();
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Collects the outputs of one command and writes them with a shared manifest.
class RunManifest {
public:
    RunManifest(std::string command, std::string scenario_text, std::uint64_t seed, nlohmann::json flags)
        : command_(std::move(command)), scenario_digest_(hex64(fnv1a(scenario_text))), seed_(seed),
          flags_(std::move(flags)) {}

    void add(const std::string& name, CsvTable table) { files_.emplace_back(name, std::move(table)); }

    /// Everything except wall-clock time, so reruns hash identically.
    nlohmann::json stable_fields() const {
        nlohmann::json j;
        j["command"] = command_;
        j["scenario_digest"] = scenario_digest_;
        j["seed"] = seed_;
        j["tool_version"] = kToolVersion;
        j["csv_schema"] = kCsvSchema;
        j["flags"] = flags_;
        nlohmann::json outs = nlohmann::json::array();
        for (const auto& f : files_) outs.push_back(f.first);
        j["outputs"] = outs;
        return j;
    }

    std::string hash() const { return hex64(fnv1a(stable_fields().dump())); }

    /// Writes every CSV plus manifest_<command>.json into `dir`; returns written paths.
    std::vector<std::string> write(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        const std::string h = hash();
        std::vector<std::string> written;
        for (const auto& [name, table] : files_) {
            const auto path = dir / name;
            std::ofstream out(path, std::ios::binary);
            if (!out) throw ConfigError("cannot write '" + path.string() + "'");
            out << table.render(h);
            written.push_back(path.string());
        }
        nlohmann::json j = stable_fields();
        j["manifest_hash"] = h;
        const auto now = std::chrono::system_clock::now();
        j["wall_clock_unix_s"] = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
        const auto mpath = dir / ("manifest_" + command_ + ".json");
        std::ofstream m(mpath, std::ios::binary);
        m << j.dump(2) << "\n";
        written.push_back(mpath.string());
        return written;
    }

    const std::vector<std::pair<std::string, CsvTable>>& files() const { return files_; }

private:
    std::string command_;
    std::string scenario_digest_;
    std::uint64_t seed_;
    nlohmann::json flags_;
    std::vector<std::pair<std::string, CsvTable>> files_;
};

} // namespace rsma_sqp::tool
