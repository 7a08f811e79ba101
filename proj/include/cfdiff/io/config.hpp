#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cfdiff/chan/scenario.hpp"
#include "cfdiff/error.hpp"

namespace cfdiff::io {

// Flat "section.key = value" text config. '#' starts a comment, blank lines
// are ignored, duplicate keys are rejected. Entry order is preserved so the
// serialized form round-trips byte-for-byte.
class Config {
  public:
    Config() = default;

    static Config parse_string(const std::string& text);
    static Config parse_file(const std::string& path);

    bool has(const std::string& key) const { return index_.count(key) != 0; }

    // Setters overwrite in place (keeping original position) or append.
    void set(const std::string& key, const std::string& value);
    void set_real(const std::string& key, double value);
    void set_int(const std::string& key, long long value);
    void set_u64(const std::string& key, std::uint64_t value);
    void set_int_list(const std::string& key, const std::vector<int>& values);
    void set_real_list(const std::string& key, const std::vector<double>& values);

    // Getters throw ConfigError naming the key when missing or malformed.
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_real(const std::string& key) const;
    double get_real(const std::string& key, double fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::uint64_t get_u64(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::vector<int> get_int_list(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;
    std::vector<double> get_real_list(const std::string& key) const;
    std::vector<double> get_real_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

    std::string to_string() const;
    void save_file(const std::string& path) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    // Formats a double with enough digits to round-trip exactly.
    static std::string format_real(double value);

  private:
    const std::string& raw(const std::string& key) const;

    std::vector<std::pair<std::string, std::string>> entries_;
    std::map<std::string, std::size_t> index_;
};

// Mapping between the config text and the concrete scenario structs. Keys
// absent from the config keep the struct defaults.
chan::ScenarioConfig scenario_from_config(const Config& config);
void scenario_to_config(const chan::ScenarioConfig& scenario, Config& config);
chan::SampleRanges ranges_from_config(const Config& config);
void ranges_to_config(const chan::SampleRanges& ranges, Config& config);

}  // namespace cfdiff::io
