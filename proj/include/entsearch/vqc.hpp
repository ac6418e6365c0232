#pragma once

#include <vector>

#include "entsearch/entanglement.hpp"
#include "entsearch/statevector.hpp"

namespace entsearch {

/// Circuit layout: encoding RY layer, CNOT block taken from beta, trainable
/// RY layer, Pauli-Z readout on every qubit. Construction validates beta.
struct CircuitSpec {
    int n_q = 0;
    EntanglementMatrix beta;

    CircuitSpec() = default;
    explicit CircuitSpec(EntanglementMatrix beta_matrix);
};

struct QuantumOutputs {
    std::vector<double> z;  // per-qubit Pauli-Z expectations, each in [-1, 1]
};

/// Partial derivatives of every output with respect to every angle;
/// entry (i, j) is d z_j / d angle_i, both indices 1-based.
struct QuantumGradients {
    int n_q = 0;
    std::vector<double> d_theta;  // row-major n_q x n_q
    std::vector<double> d_f;

    double dtheta(int i, int j) const { return d_theta[(i - 1) * n_q + (j - 1)]; }
    double df(int i, int j) const { return d_f[(i - 1) * n_q + (j - 1)]; }
};

/// z_j = <psi| Z_j |psi> with |psi> = RY(theta) . CNOT(beta) . RY(f) . H^n |0..0>.
/// CNOTs are applied in ascending control order, then ascending target order
/// within each row of beta; the ordering is part of the contract because
/// CNOTs on overlapping qubits do not commute.
QuantumOutputs forward(const CircuitSpec& spec, const std::vector<double>& f,
                       const std::vector<double>& theta);

/// Exact parameter-shift gradients: d z_j / d a_i = [z_j(a_i + pi/2) -
/// z_j(a_i - pi/2)] / 2 for both theta and f angles. Costs 4 n_q forwards.
QuantumGradients gradients(const CircuitSpec& spec, const std::vector<double>& f,
                           const std::vector<double>& theta);

}  // namespace entsearch
