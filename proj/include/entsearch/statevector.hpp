#pragma once

#include <array>
#include <complex>
#include <vector>

namespace entsearch {

/// Dense statevector over n_q qubits. Qubit 1 is the most significant bit of
/// the basis-state index, so amplitudes read left-to-right as |q1 q2 ... qn>.
struct StateVector {
    int n_q = 0;
    std::vector<std::complex<double>> amplitudes;
};

/// 2x2 unitary; construction rejects non-unitary entries (G'G = I to 1e-12).
struct SingleQubitGate {
    std::array<std::complex<double>, 4> m;  // row-major [[m0 m1],[m2 m3]]

    SingleQubitGate(std::complex<double> a, std::complex<double> b, std::complex<double> c,
                    std::complex<double> d);
};

SingleQubitGate hadamard();

/// RY(theta) = exp(-i theta Y / 2) = [[cos t/2, -sin t/2],[sin t/2, cos t/2]].
SingleQubitGate rotation_y(double theta);

/// |0...0> register; 1 <= n_q <= 20.
StateVector init_zero(int n_q);

double norm(const StateVector& state);

/// Applies the gate to qubit q (1-based) in place via stride iteration.
void apply_single(StateVector& state, const SingleQubitGate& gate, int q);

/// CNOT with the given 1-based control and target (control != target).
void apply_cnot(StateVector& state, int control, int target);

/// Pauli-Z expectation of qubit q: P(bit 0) - P(bit 1), in [-1, 1].
double expectation_z(const StateVector& state, int q);

}  // namespace entsearch
