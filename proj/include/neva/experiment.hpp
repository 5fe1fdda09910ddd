#pragma once

// Experiment configuration and dataset manifests (JSON). Every value that
// influences a result lives here; commands echo the fully resolved
// configuration into a manifest next to their outputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "neva/attention.hpp"
#include "neva/foveation.hpp"
#include "neva/metrics.hpp"
#include "neva/synthetic.hpp"
#include "neva/tasks.hpp"

namespace neva::experiment {

// Bad or inconsistent configuration (maps to exit code 2).
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct SyntheticSpec {
    int n_train = 2000;
    int n_test = 500;
    std::uint64_t seed = 7;
    data::SyntheticConfig image;
    data::OracleHumanConfig humans;
};

// Train or test draw of a synthetic dataset; the two come from distinct
// streams of the same seed.
std::vector<data::SyntheticSample> synthetic_split(const SyntheticSpec& spec, bool train);

struct DatasetManifest {
    std::string name;
    std::filesystem::path image_dir;      // resolved against the manifest's folder
    std::filesystem::path fixation_file;  // idem
    std::optional<SyntheticSpec> synthetic;
    nlohmann::json preprocessing = nlohmann::json::object();

    nlohmann::json to_json(const std::filesystem::path& relative_to = {}) const;
    static DatasetManifest from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    static DatasetManifest load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

struct BaselineConfig {
    double sigma_center = 0.15;
    double ior_radius = 0.1;
};

struct ExperimentConfig {
    std::filesystem::path dataset;  // dataset manifest path
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 1;
    int length = 10;  // T, fixations per generated scanpath
    int max_k = 5;
    metrics::GridSpec grid;
    bool truncate_human = true;
    foveation::FoveationConfig foveation;
    tasks::TaskKind task_kind = tasks::TaskKind::classification;
    tasks::TaskTrainConfig task;
    int task_input_size = 32;  // used when training on an image folder
    attention::NevaTrainConfig attention;
    nlohmann::json attention_architecture;
    BaselineConfig baselines;

    // Throws ConfigError when a value violates its owning type's invariants.
    void validate() const;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);

    metrics::EvalConfig eval_config() const;
};

// Reads a configuration file. A command manifest is accepted as well: its
// "config" member is used.
nlohmann::json read_config_json(const std::filesystem::path& path);

// Applies "a.b.c=value" overrides; value is parsed as JSON when possible and
// taken as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

}  // namespace neva::experiment
