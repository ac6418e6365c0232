#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

namespace entsearch {

/// Binary control->target entanglement matrix. Row index is the control
/// qubit, column index the target; a 1 at (i,j) means a CNOT with control i
/// and target j. Qubit indices are 1-based everywhere in the public API.
class EntanglementMatrix {
public:
    EntanglementMatrix() = default;

    /// Zero matrix (no entanglements) over n_q qubits.
    explicit EntanglementMatrix(int n_q);

    /// Wraps a rectangular n_q x n_q grid of raw integer entries without
    /// checking them; use validate() to surface violations.
    static EntanglementMatrix from_grid(const std::vector<std::vector<int>>& grid);

    int qubit_count() const { return n_q_; }

    /// Entry at (control, target), both 1-based.
    int entry(int control, int target) const;
    void set_entry(int control, int target, int value);

    bool operator==(const EntanglementMatrix&) const = default;

private:
    int n_q_ = 0;
    std::vector<int> vals_;  // row-major n_q x n_q
};

/// Sampling request: qubit count plus one of three stochastic modes.
struct SamplingSpec {
    enum class Mode { Unconstrained, Constrained, SemiConstrained };

    int n_q = 0;
    Mode mode = Mode::Unconstrained;
    int total = 0;          // E, unconstrained mode
    int per_qubit = 0;      // k, constrained mode
    int per_qubit_max = 0;  // k_max, semi-constrained mode

    static SamplingSpec unconstrained(int n_q, int total_entanglements);
    static SamplingSpec constrained(int n_q, int per_qubit);
    static SamplingSpec semi_constrained(int n_q, int per_qubit_max);

    /// Throws std::invalid_argument when the parameters are out of range:
    /// unconstrained 0 <= E <= n_q(n_q-1), constrained 1 <= k <= n_q-1,
    /// semi-constrained 0 <= k_max <= n_q-1.
    void check() const;
};

enum class TopologyKind { Ring, NearestNeighbor, NoEntanglement, FullyEntangled };

/// Number of entanglements initiated by the given control qubit (row sum).
int per_qubit_count(const EntanglementMatrix& beta, int control);

/// Total number of entanglements (sum of all entries).
int total_entanglements(const EntanglementMatrix& beta);

/// Entanglement density in percent: 100*E / (n_q(n_q-1)). Requires n_q >= 2.
double density(const EntanglementMatrix& beta);

/// Density of a constrained configuration: 100*k / (n_q-1) for 0 <= k <= n_q-1.
double constrained_density(int n_q, int k);

/// Number of possible configurations, 2^(n_q(n_q-1)) for directed gates or
/// 2^(n_q(n_q-1)/2) for symmetric ones, as an exact decimal string (the
/// asymmetric count for n_q = 8 already exceeds 2^56).
std::string count_configurations(int n_q, bool symmetric);

/// Draws a configuration under the given spec. Unconstrained mode picks E
/// off-diagonal cells uniformly without replacement; constrained mode picks
/// k targets per row uniformly without replacement; semi-constrained mode
/// first draws each row's count uniformly from {0..k_max}. Deterministic for
/// a given generator state.
EntanglementMatrix sample(const SamplingSpec& spec, std::mt19937_64& rng);

/// One of the four conventional benchmark topologies. Requires n_q >= 2.
EntanglementMatrix conventional(TopologyKind kind, int n_q);

/// Returns human-readable violations (empty means the matrix is valid):
/// nonzero diagonal entries and non-binary entries.
std::vector<std::string> validate(const EntanglementMatrix& beta);

/// CSV encoding, one row per line of comma-separated 0/1, trailing newline.
std::string serialize(const EntanglementMatrix& beta);

/// Parses the CSV form. Throws std::invalid_argument on ragged rows,
/// non-binary tokens, or a nonzero diagonal.
EntanglementMatrix parse(const std::string& text);

const char* topology_name(TopologyKind kind);
const char* mode_name(SamplingSpec::Mode mode);

/// Configuration plus the provenance needed to reproduce it; serialized as
/// {n_q, mode, k|E|k_max, seed, matrix_csv}.
struct ConfigurationDescriptor {
    EntanglementMatrix matrix;
    std::string mode;  // sampling mode or topology name
    std::optional<int> per_qubit;
    std::optional<int> total;
    std::optional<int> per_qubit_max;
    std::optional<std::uint64_t> seed;
};

ConfigurationDescriptor describe(const EntanglementMatrix& beta, const SamplingSpec& spec,
                                 std::uint64_t seed);
ConfigurationDescriptor describe(const EntanglementMatrix& beta, TopologyKind kind);

nlohmann::json descriptor_to_json(const ConfigurationDescriptor& desc);
ConfigurationDescriptor descriptor_from_json(const nlohmann::json& j);

}  // namespace entsearch
