#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "entsearch/experiment.hpp"
#include "entsearch/features.hpp"
#include "entsearch/nnet.hpp"

namespace entsearch::cli {

/// Error carrying the process exit code: 2 config, 3 training, 4 selection.
struct CliError : std::runtime_error {
    int exit_code;
    CliError(int code, const std::string& msg) : std::runtime_error(msg), exit_code(code) {}
};

inline CliError config_error(const std::string& msg) { return {2, msg}; }
inline CliError training_error(const std::string& msg) { return {3, msg}; }
inline CliError selection_error(const std::string& msg) { return {4, msg}; }

/// Experiment configuration file: versioned JSON, unknown fields rejected.
struct ExperimentConfig {
    std::optional<std::string> dataset_path;
    std::optional<SyntheticSpec> synthetic;
    int n_q = 8;
    std::optional<int> pca_dim;
    TrainConfig train;  // defaults mirror the reference hyperparameters
    std::vector<SearchCell> cells;
    std::array<double, 3> split_fractions{0.5, 0.25, 0.25};
    std::vector<double> ensemble_top_r{1, 5, 10, 20, 30};
    std::string output_dir;
    std::uint64_t master_seed = 0;

    std::filesystem::path base_dir;  // directory of the config file
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// Master-seed precedence: command-line flag, then ENTANGLE_SEED, then config.
std::uint64_t resolve_master_seed(const ExperimentConfig& cfg,
                                  const std::optional<std::uint64_t>& flag);

struct PreparedData {
    FeatureTable table;
    std::optional<PcaModel> pca;
};

/// Loads or synthesizes the feature table, assigns patient-wise splits when
/// the table carries none, and applies PCA fitted on the training split.
PreparedData prepare_dataset(const ExperimentConfig& cfg, std::uint64_t master_seed);

}  // namespace entsearch::cli
