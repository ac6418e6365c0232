#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace entsearch {

enum class Split { Train, Validation, Test, Unassigned };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

/// Row-aligned feature table: S feature rows with class label, patient id,
/// and split tag per row. Patient-wise splitting guarantees every patient id
/// maps to exactly one split.
struct FeatureTable {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::vector<std::string> patient_ids;
    std::vector<Split> splits;

    std::size_t size() const { return rows.size(); }
    int dimension() const { return rows.empty() ? 0 : static_cast<int>(rows.front().size()); }
    int num_classes() const;
    std::vector<std::size_t> indices_of(Split s) const;
    std::vector<std::vector<double>> rows_of(Split s) const;
};

/// Fitted PCA projection. Components are stored column-major: entries
/// [c*input_dim, (c+1)*input_dim) form principal direction c. Immutable
/// after fit; centering only, no variance scaling.
struct PcaModel {
    int input_dim = 0;
    int output_dim = 0;
    std::vector<double> mean;
    std::vector<double> components;
    std::vector<double> explained_variance;  // descending
};

/// Fits on the given rows (callers pass the training split only): mean
/// centering followed by SVD; keeps the top-d right singular directions with
/// the largest-magnitude entry of each made positive. Requires
/// 1 <= d <= min(S-1, D) and non-degenerate data.
PcaModel pca_fit(const std::vector<std::vector<double>>& rows, int d);

/// (rows - mean) projected onto the fitted components.
std::vector<std::vector<double>> pca_transform(const PcaModel& model,
                                               const std::vector<std::vector<double>>& rows);

nlohmann::json pca_model_to_json(const PcaModel& model);
PcaModel pca_model_from_json(const nlohmann::json& j);

/// Assigns every row a split tag by partitioning patients, never rows:
/// patient ids are collected, shuffled by seed, and allocated to splits by
/// largest remainder so counts approximate the fractions, with at least one
/// patient per split. Fractions must be positive and sum to 1 within 1e-9.
void patient_split(FeatureTable& table, const std::array<double, 3>& fractions,
                   std::uint64_t seed);

/// Desk-scale stand-in for an upstream feature extractor: two Gaussian
/// classes separated along a random unit direction, grouped into synthetic
/// patients of consecutive rows.
struct SyntheticSpec {
    int samples_per_class = 0;
    int dimension = 0;
    double separation = 0.0;
    int patients_per_class = 0;
    std::uint64_t seed = 0;

    void check() const;
};

FeatureTable synthesize_dataset(const SyntheticSpec& spec);

/// CSV with header patient_id,label[,split],f1,...,fD. Malformed rows are
/// reported with their line number.
FeatureTable load_features(const std::filesystem::path& path);
void save_features(const FeatureTable& table, const std::filesystem::path& path);

}  // namespace entsearch
