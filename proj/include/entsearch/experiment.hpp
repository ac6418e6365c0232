#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "entsearch/entanglement.hpp"
#include "entsearch/features.hpp"
#include "entsearch/nnet.hpp"

namespace entsearch {

/// One trained configuration's identity and results. Stored as one JSON
/// object per line in a records file. Failed runs are persisted with the
/// failure marker set so cell counts stay auditable.
struct RunRecord {
    std::string run_id;
    std::string cell;  // owning search cell label; empty for standalone runs
    std::string mode;  // sampling mode, topology name, or "baseline"
    std::optional<ConfigurationDescriptor> beta;
    std::optional<double> mu;
    std::optional<int> per_qubit;      // k
    std::optional<int> total;          // E
    std::optional<int> per_qubit_max;  // k_max
    std::uint64_t seed = 0;
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
    int best_epoch = 0;
    std::vector<std::vector<double>> theta_history;       // per-epoch snapshots
    std::vector<std::vector<double>> test_probabilities;  // per test sample, enables ensembling
    double wall_time = 0.0;                               // seconds
    bool failed = false;
    std::string error;
};

nlohmann::json record_to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& j);

/// JSON-lines persistence: one record per line.
void save_records(const std::vector<RunRecord>& records, const std::filesystem::path& path);
std::vector<RunRecord> load_records(const std::filesystem::path& path);

/// Stable per-run seed: splitmix64 applied over master seed, cell index, and
/// run index in sequence. Changing one run's index never affects another's
/// seed.
std::uint64_t derive_run_seed(std::uint64_t master_seed, std::uint64_t cell_index,
                              std::uint64_t run_index);

/// Cell index used when deriving the baseline's seed.
inline constexpr std::uint64_t baseline_cell_index = ~std::uint64_t{0};

struct SearchCell {
    SamplingSpec spec;
    int n_runs = 1;
};

/// Canonical label for a cell, e.g. "constrained-k2" or "unconstrained-E16".
std::string cell_label(const SamplingSpec& spec);

struct SearchConfig {
    int n_q = 8;
    std::vector<SearchCell> cells;
    std::uint64_t master_seed = 0;
    TrainConfig train;
    int jobs = 0;  // 0 = hardware concurrency
    std::optional<bool> capture_theta;  // default: on when n_q <= 8
};

/// Trains one dressed configuration and evaluates it on validation and test.
/// model_out/history_out, when given, receive the trained model and the full
/// epoch history (for checkpointing).
RunRecord run_single(const ConfigurationDescriptor& config, std::uint64_t seed,
                     const FeatureTable& data, const TrainConfig& train_cfg,
                     bool capture_theta = true, const std::string& run_id = "run",
                     const std::string& cell = "", DressedNet* model_out = nullptr,
                     TrainHistory* history_out = nullptr);

/// Trains the two-dense-layer classical model with hidden width n_q.
RunRecord run_baseline(const FeatureTable& data, const TrainConfig& train_cfg,
                       std::uint64_t seed, int n_q = 8, ClassicalBaseline* model_out = nullptr,
                       TrainHistory* history_out = nullptr);

/// Executes every cell's runs (concurrently up to cfg.jobs) and returns the
/// records in canonical order: cell order, then run index. A run that throws
/// is recorded as failed, never dropped. on_complete, when set, is invoked
/// once per finished run (serialized, in completion order).
std::vector<RunRecord> run_search(const SearchConfig& cfg, const FeatureTable& data,
                                  const std::function<void(const RunRecord&)>& on_complete = {});

/// Records that strictly beat the baseline; failed runs are excluded.
/// by_validation switches the comparison to validation accuracy.
std::vector<RunRecord> constructive_subspace(const std::vector<RunRecord>& records,
                                             const RunRecord& baseline,
                                             bool by_validation = false);

/// Top max(1, floor(r*N/100)) records by validation accuracy (ties resolve
/// to the lower run_id); r is a percentage in (0, 100].
std::vector<RunRecord> top_r_select(const std::vector<RunRecord>& records, double r);

struct EnsembleResult {
    std::vector<std::string> member_run_ids;
    double test_accuracy = 0.0;
    std::vector<std::vector<double>> aggregated_probs;  // per sample, mean over members
};

/// Probability-based majority voting: sums each member's per-sample
/// probability vectors and predicts the argmax of the sum (ties resolve to
/// the lower class index).
EnsembleResult ensemble_vote(const std::vector<std::vector<std::vector<double>>>& member_probs,
                             const std::vector<int>& labels,
                             std::vector<std::string> member_run_ids = {});

struct EnsembleEntry {
    std::string cell;
    double r = 0.0;
    EnsembleResult result;
};

nlohmann::json ensemble_entry_to_json(const EnsembleEntry& entry);
EnsembleEntry ensemble_entry_from_json(const nlohmann::json& j);

struct Report {
    nlohmann::json document;
    std::string scatter_csv;  // cell,mode,mu,k,test_acc per record
    std::string topr_csv;     // cell,r,ensemble_acc per ensemble entry
};

/// Summarizes records per cell (best/median test accuracy, best validation
/// accuracy), the baseline, the constructive subspace, and ensemble results.
/// The ensemble section is omitted when no entries are given.
Report build_report(const std::vector<RunRecord>& records, const RunRecord* baseline,
                    const std::vector<EnsembleEntry>& ensembles);

}  // namespace entsearch
