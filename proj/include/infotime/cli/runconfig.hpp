#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "infotime/data/synthetic.hpp"
#include "infotime/train/trainer.hpp"

namespace infotime::cli {

/// Flat key = value run configuration. '#' starts a comment; unknown keys
/// are rejected. Precedence: command-line overrides > config file >
/// defaults. The resolved form is echoed into every output directory.
class RunConfig {
public:
    RunConfig();

    /// All known keys with their default values.
    static const std::map<std::string, std::string>& defaults();

    void load_file(const std::filesystem::path& path);
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::size_t get_size(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;   // comma separated
    std::vector<std::size_t> get_size_list(const std::string& key) const;
    std::vector<std::uint64_t> get_u64_list(const std::string& key) const;

    /// Resolved configuration, one key = value per line, sorted by key.
    std::string echo() const;

    train::TrainConfig to_train_config() const;
    data::SyntheticSpec to_synthetic_spec() const;

private:
    std::map<std::string, std::string> values_;
};

} // namespace infotime::cli
