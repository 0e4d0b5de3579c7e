#pragma once

// Scenario files: UTF-8 text, one `key = value` per line, '#' comments.
// Keys are dotted (`channel.pathloss_exp`); a `[channel]` line prefixes the
// keys that follow it. Unknown keys are rejected.

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rsma_sqp/errors.hpp"
#include "rsma_sqp/scenario.hpp"

namespace rsma_sqp {

namespace config_detail {

inline std::string trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
}

inline long long to_int(const std::string& key, const std::string& v) {
    const double x = to_double(key, v);
    if (x != std::floor(x)) throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    return static_cast<long long>(x);
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

template <class T, class Conv>
std::array<T, 2> pair_of(const std::string& key, const std::string& v, Conv conv) {
    auto items = split_list(v);
    if (items.size() != 2) throw ConfigError("key '" + key + "': expected two comma-separated values");
    return {static_cast<T>(conv(key, items[0])), static_cast<T>(conv(key, items[1]))};
}

inline bool apply_qos(QosTarget& q, const Scenario& s, const std::string& field, const std::string& key,
                      const std::string& v) {
    if (field == "w_th_ms") q.w_th_slots = slots_from_ms(s, to_double(key, v));
    else if (field == "w_th_slots") q.w_th_slots = static_cast<int>(to_int(key, v));
    else if (field == "xi_th") q.xi_th = to_double(key, v);
    else if (field == "eps_th") q.eps_th = to_double(key, v);
    else return false;
    return true;
}

} // namespace config_detail

/// Apply one `key = value` assignment to a scenario. Throws ConfigError on unknown keys.
inline void apply_setting(Scenario& s, const std::string& key, const std::string& value) {
    using namespace config_detail;
    const std::string& v = value;
    auto num = [&] { return to_double(key, v); };

    if (key == "scheme") s.scheme = parse_scheme(v);
    else if (key == "channel.cell_radius_m") s.cell_radius_m = num();
    else if (key == "channel.bandwidth_hz") s.bandwidth_hz = num();
    else if (key == "channel.slot_s") s.slot_s = num();
    else if (key == "channel.n0_cu") s.n0_cu = static_cast<int>(to_int(key, v));
    else if (key == "channel.np_cu") s.np_cu = pair_of<int>(key, v, to_int);
    else if (key == "channel.noise_psd_dbm_hz") s.noise_psd_dbm_hz = num();
    else if (key == "channel.pathloss_exp") s.pathloss_exp = num();
    else if (key == "channel.shadow_sigma_db") s.shadow_sigma_db = num();
    else if (key == "channel.shadow_seed") s.shadow_seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "channel.distances_m") s.distances_m = pair_of<double>(key, v, to_double);
    else if (key == "channel.h_hat_mode") {
        if (v == "mean_power") s.h_hat.kind = HHatMode::Kind::MeanPower;
        else if (v == "fixed") s.h_hat.kind = HHatMode::Kind::Fixed;
        else if (v == "marginalize") s.h_hat.kind = HHatMode::Kind::Marginalize;
        else throw ConfigError("key '" + key + "': expected mean_power, fixed or marginalize");
    } else if (key == "channel.h_hat_sq") s.h_hat.fixed_sq = pair_of<double>(key, v, to_double);
    else if (key == "channel.h_hat_samples") s.h_hat.samples = static_cast<int>(to_int(key, v));
    else if (key == "traffic.arrival_rate_bps") s.arrival_rate_bps = num();
    else if (key == "power.p_max_w") s.p_max_w = num();
    else if (key == "packet.b_min_bits") s.b_min_bits = num();
    else if (key == "packet.b_max_bits") s.b_max_bits = num();
    else if (key == "algo.pi_th") s.algo.pi_th = num();
    else if (key == "algo.m_iter") s.algo.m_iter = static_cast<int>(to_int(key, v));
    else if (key == "algo.psi_theta") s.algo.psi_theta = num();
    else if (key == "algo.psi_th") s.algo.psi_th = num();
    else if (key == "algo.lambda_s") s.algo.lambda_s = num();
    else if (key == "algo.phi_th") s.algo.phi_th = num();
    else if (key.rfind("qos.", 0) == 0) {
        const std::string rest = key.substr(4);
        const auto dot = rest.find('.');
        if (dot == std::string::npos) {
            if (!apply_qos(s.qos, s, rest, key, v)) throw ConfigError("unknown key '" + key + "'");
        } else {
            StreamId q;
            try {
                q = parse_stream(rest.substr(0, dot));
            } catch (const ConfigError&) {
                throw ConfigError("unknown key '" + key + "'");
            }
            auto [it, inserted] = s.qos_override.try_emplace(q, s.qos);
            if (!apply_qos(it->second, s, rest.substr(dot + 1), key, v))
                throw ConfigError("unknown key '" + key + "'");
        }
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

/// Parse scenario text. An empty document yields the defaults.
inline Scenario parse_scenario(std::istream& in, const std::string& origin = "<input>") {
    Scenario s;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = config_detail::trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section");
            section = config_detail::trim(std::string_view(t).substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = config_detail::trim(std::string_view(t).substr(0, eq));
        const std::string value = config_detail::trim(std::string_view(t).substr(eq + 1));
        if (!section.empty()) key = section + "." + key;
        try {
            apply_setting(s, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    validate(s);
    return s;
}

inline Scenario parse_scenario_text(const std::string& text) {
    std::istringstream in(text);
    return parse_scenario(in);
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    return parse_scenario(in, path);
}

/// Canonical text form: every key, fixed order, round-trip precision.
inline std::string to_text(const Scenario& s) {
    std::ostringstream o;
    o << std::setprecision(17);
    o << "scheme = " << to_string(s.scheme) << "\n";
    o << "channel.cell_radius_m = " << s.cell_radius_m << "\n";
    o << "channel.bandwidth_hz = " << s.bandwidth_hz << "\n";
    o << "channel.slot_s = " << s.slot_s << "\n";
    o << "channel.n0_cu = " << s.n0_cu << "\n";
    o << "channel.np_cu = " << s.np_cu[0] << "," << s.np_cu[1] << "\n";
    o << "channel.noise_psd_dbm_hz = " << s.noise_psd_dbm_hz << "\n";
    o << "channel.pathloss_exp = " << s.pathloss_exp << "\n";
    o << "channel.shadow_sigma_db = " << s.shadow_sigma_db << "\n";
    o << "channel.shadow_seed = " << s.shadow_seed << "\n";
    o << "channel.distances_m = " << s.distances_m[0] << "," << s.distances_m[1] << "\n";
    const char* mode = s.h_hat.kind == HHatMode::Kind::MeanPower ? "mean_power"
                       : s.h_hat.kind == HHatMode::Kind::Fixed   ? "fixed"
                                                                 : "marginalize";
    o << "channel.h_hat_mode = " << mode << "\n";
    o << "channel.h_hat_sq = " << s.h_hat.fixed_sq[0] << "," << s.h_hat.fixed_sq[1] << "\n";
    o << "channel.h_hat_samples = " << s.h_hat.samples << "\n";
    o << "traffic.arrival_rate_bps = " << s.arrival_rate_bps << "\n";
    o << "power.p_max_w = " << s.p_max_w << "\n";
    o << "packet.b_min_bits = " << s.b_min_bits << "\n";
    o << "packet.b_max_bits = " << s.b_max_bits << "\n";
    o << "algo.pi_th = " << s.algo.pi_th << "\n";
    o << "algo.m_iter = " << s.algo.m_iter << "\n";
    o << "algo.psi_theta = " << s.algo.psi_theta << "\n";
    o << "algo.psi_th = " << s.algo.psi_th << "\n";
    o << "algo.lambda_s = " << s.algo.lambda_s << "\n";
    o << "algo.phi_th = " << s.algo.phi_th << "\n";
    o << "qos.w_th_slots = " << s.qos.w_th_slots << "\n";
    o << "qos.xi_th = " << s.qos.xi_th << "\n";
    o << "qos.eps_th = " << s.qos.eps_th << "\n";
    for (const auto& [q, t] : s.qos_override) {
        o << "qos." << to_string(q) << ".w_th_slots = " << t.w_th_slots << "\n";
        o << "qos." << to_string(q) << ".xi_th = " << t.xi_th << "\n";
        o << "qos." << to_string(q) << ".eps_th = " << t.eps_th << "\n";
    }
    return o.str();
}

} // namespace rsma_sqp
