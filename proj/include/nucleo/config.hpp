#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace nucleo::cli {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key=value store. Lines are "key = value"; blank lines are ignored and
// '#' starts a comment anywhere on a line. Section membership is spelled in
// the key ("seg.min_size"), so the file stays greppable and overridable one
// key at a time.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig parse_file(const std::string& path);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<int> get_int_list(const std::string& key,
                                  std::vector<int> fallback) const;
    std::vector<double> get_double_list(const std::string& key,
                                        std::vector<double> fallback) const;
    std::vector<std::string> get_string_list(const std::string& key) const;

    // typo safety: every present key must be in `allowed`
    void reject_unknown_keys(const std::vector<std::string>& allowed) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace nucleo::cli
