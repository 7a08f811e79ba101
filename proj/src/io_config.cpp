#include "cfdiff/io/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cfdiff::io {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (key.find_first_of(" \t") != std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": key '" + key +
                              "' contains whitespace");
        if (cfg.has(key))
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" +
                              key + "'");
        cfg.set(key, value);
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_string(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void Config::set(const std::string& key, const std::string& value) {
    auto it = index_.find(key);
    if (it != index_.end()) {
        entries_[it->second].second = value;
    } else {
        index_[key] = entries_.size();
        entries_.emplace_back(key, value);
    }
}

std::string Config::format_real(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void Config::set_real(const std::string& key, double value) { set(key, format_real(value)); }

void Config::set_int(const std::string& key, long long value) { set(key, std::to_string(value)); }

void Config::set_u64(const std::string& key, std::uint64_t value) {
    set(key, std::to_string(value));
}

void Config::set_int_list(const std::string& key, const std::vector<int>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(values[i]);
    }
    set(key, s);
}

void Config::set_real_list(const std::string& key, const std::vector<double>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ", ";
        s += format_real(values[i]);
    }
    set(key, s);
}

const std::string& Config::raw(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) throw ConfigError("missing config key '" + key + "'");
    return entries_[it->second].second;
}

std::string Config::get_string(const std::string& key) const { return raw(key); }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
}

double Config::get_real(const std::string& key) const {
    const std::string& s = raw(key);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse '" + s + "' as a real number");
    }
    if (used != s.size())
        throw ConfigError("config key '" + key + "': trailing junk in '" + s + "'");
    return v;
}

double Config::get_real(const std::string& key, double fallback) const {
    return has(key) ? get_real(key) : fallback;
}

long long Config::get_int(const std::string& key) const {
    const std::string& s = raw(key);
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse '" + s + "' as an integer");
    }
    if (used != s.size())
        throw ConfigError("config key '" + key + "': trailing junk in '" + s + "'");
    return v;
}

long long Config::get_int(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key) const {
    const std::string& s = raw(key);
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse '" + s +
                          "' as an unsigned integer");
    }
    if (used != s.size())
        throw ConfigError("config key '" + key + "': trailing junk in '" + s + "'");
    return v;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

std::vector<int> Config::get_int_list(const std::string& key) const {
    const std::string& s = raw(key);
    std::vector<int> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty())
            throw ConfigError("config key '" + key + "': empty element in list '" + s + "'");
        std::size_t used = 0;
        try {
            out.push_back(std::stoi(item, &used));
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': cannot parse list element '" + item +
                              "'");
        }
        if (used != item.size())
            throw ConfigError("config key '" + key + "': trailing junk in list element '" + item +
                              "'");
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

std::vector<int> Config::get_int_list(const std::string& key,
                                      const std::vector<int>& fallback) const {
    return has(key) ? get_int_list(key) : fallback;
}

std::vector<double> Config::get_real_list(const std::string& key) const {
    const std::string& s = raw(key);
    std::vector<double> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty())
            throw ConfigError("config key '" + key + "': empty element in list '" + s + "'");
        std::size_t used = 0;
        try {
            out.push_back(std::stod(item, &used));
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': cannot parse list element '" + item +
                              "'");
        }
        if (used != item.size())
            throw ConfigError("config key '" + key + "': trailing junk in list element '" + item +
                              "'");
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

std::vector<double> Config::get_real_list(const std::string& key,
                                          const std::vector<double>& fallback) const {
    return has(key) ? get_real_list(key) : fallback;
}

std::string Config::to_string() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

void Config::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << to_string();
    if (!out) throw IoError("failed writing config to '" + path + "'");
}

chan::ScenarioConfig scenario_from_config(const Config& c) {
    chan::ScenarioConfig s;
    s.area_width_m = c.get_real("scenario.area_width_m", s.area_width_m);
    s.area_height_m = c.get_real("scenario.area_height_m", s.area_height_m);
    s.num_aps = static_cast<int>(c.get_int("scenario.num_aps", s.num_aps));
    s.num_receive_aps = static_cast<int>(c.get_int("scenario.num_receive_aps", s.num_receive_aps));
    s.antennas = static_cast<int>(c.get_int("scenario.antennas", s.antennas));
    s.num_ues = static_cast<int>(c.get_int("scenario.num_ues", s.num_ues));
    s.pilot_length = static_cast<int>(c.get_int("scenario.pilot_length", s.pilot_length));
    s.max_target_distance_m =
        c.get_real("scenario.max_target_distance_m", s.max_target_distance_m);
    s.carrier_freq_ghz = c.get_real("scenario.carrier_freq_ghz", s.carrier_freq_ghz);
    s.rician_k = c.get_real("scenario.rician_k", s.rician_k);
    s.target_snr_db = c.get_real("scenario.target_snr_db", s.target_snr_db);
    s.max_power_w = c.get_real("scenario.max_power_w", s.max_power_w);
    s.noise_power_w = c.get_real("scenario.noise_power_w", s.noise_power_w);
    s.radar_noise_power_w = c.get_real("scenario.radar_noise_power_w", s.radar_noise_power_w);
    s.rcs_variance_m2 = c.get_real("scenario.rcs_variance_m2", s.rcs_variance_m2);
    s.shadow_std_db = c.get_real("scenario.shadow_std_db", s.shadow_std_db);
    s.radar_snapshots = static_cast<int>(c.get_int("scenario.radar_snapshots", s.radar_snapshots));
    s.seed = c.get_u64("scenario.seed", s.seed);
    return s;
}

void scenario_to_config(const chan::ScenarioConfig& s, Config& c) {
    c.set_real("scenario.area_width_m", s.area_width_m);
    c.set_real("scenario.area_height_m", s.area_height_m);
    c.set_int("scenario.num_aps", s.num_aps);
    c.set_int("scenario.num_receive_aps", s.num_receive_aps);
    c.set_int("scenario.antennas", s.antennas);
    c.set_int("scenario.num_ues", s.num_ues);
    c.set_int("scenario.pilot_length", s.pilot_length);
    c.set_real("scenario.max_target_distance_m", s.max_target_distance_m);
    c.set_real("scenario.carrier_freq_ghz", s.carrier_freq_ghz);
    c.set_real("scenario.rician_k", s.rician_k);
    c.set_real("scenario.target_snr_db", s.target_snr_db);
    c.set_real("scenario.max_power_w", s.max_power_w);
    c.set_real("scenario.noise_power_w", s.noise_power_w);
    c.set_real("scenario.radar_noise_power_w", s.radar_noise_power_w);
    c.set_real("scenario.rcs_variance_m2", s.rcs_variance_m2);
    c.set_real("scenario.shadow_std_db", s.shadow_std_db);
    c.set_int("scenario.radar_snapshots", s.radar_snapshots);
    c.set_u64("scenario.seed", s.seed);
}

chan::SampleRanges ranges_from_config(const Config& c) {
    chan::SampleRanges r;
    r.num_ues_lo = static_cast<int>(c.get_int("ranges.num_ues_lo", r.num_ues_lo));
    r.num_ues_hi = static_cast<int>(c.get_int("ranges.num_ues_hi", r.num_ues_hi));
    r.pilot_lengths = c.get_int_list("ranges.pilot_lengths", r.pilot_lengths);
    r.max_target_distance_lo_m =
        c.get_real("ranges.max_target_distance_lo_m", r.max_target_distance_lo_m);
    r.max_target_distance_hi_m =
        c.get_real("ranges.max_target_distance_hi_m", r.max_target_distance_hi_m);
    r.target_snr_lo_db = c.get_real("ranges.target_snr_lo_db", r.target_snr_lo_db);
    r.target_snr_hi_db = c.get_real("ranges.target_snr_hi_db", r.target_snr_hi_db);
    return r;
}

void ranges_to_config(const chan::SampleRanges& r, Config& c) {
    c.set_int("ranges.num_ues_lo", r.num_ues_lo);
    c.set_int("ranges.num_ues_hi", r.num_ues_hi);
    c.set_int_list("ranges.pilot_lengths", r.pilot_lengths);
    c.set_real("ranges.max_target_distance_lo_m", r.max_target_distance_lo_m);
    c.set_real("ranges.max_target_distance_hi_m", r.max_target_distance_hi_m);
    c.set_real("ranges.target_snr_lo_db", r.target_snr_lo_db);
    c.set_real("ranges.target_snr_hi_db", r.target_snr_hi_db);
}

}  // namespace cfdiff::io
