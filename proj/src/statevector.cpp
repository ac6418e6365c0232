#include "entsearch/statevector.hpp"

#include <cmath>
#include <stdexcept>

namespace entsearch {

namespace {

// Bit position (from the LSB) of 1-based qubit q under the MSB-first order.
int bit_position(const StateVector& state, int q) {
    if (q < 1 || q > state.n_q) throw std::out_of_range("qubit index out of range");
    return state.n_q - q;
}

}  // namespace

SingleQubitGate::SingleQubitGate(std::complex<double> a, std::complex<double> b,
                                 std::complex<double> c, std::complex<double> d)
    : m{a, b, c, d} {
    // G'G = I within 1e-12
    const std::complex<double> g00 = std::conj(a) * a + std::conj(c) * c;
    const std::complex<double> g01 = std::conj(a) * b + std::conj(c) * d;
    const std::complex<double> g11 = std::conj(b) * b + std::conj(d) * d;
    if (std::abs(g00 - 1.0) > 1e-12 || std::abs(g11 - 1.0) > 1e-12 || std::abs(g01) > 1e-12)
        throw std::invalid_argument("SingleQubitGate: matrix is not unitary");
}

SingleQubitGate hadamard() {
    const double h = 1.0 / std::sqrt(2.0);
    return {{h, 0.0}, {h, 0.0}, {h, 0.0}, {-h, 0.0}};
}

SingleQubitGate rotation_y(double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    return {{c, 0.0}, {-s, 0.0}, {s, 0.0}, {c, 0.0}};
}

StateVector init_zero(int n_q) {
    if (n_q < 1 || n_q > 20) throw std::invalid_argument("init_zero: n_q must be in [1, 20]");
    StateVector state;
    state.n_q = n_q;
    state.amplitudes.assign(std::size_t{1} << n_q, {0.0, 0.0});
    state.amplitudes[0] = {1.0, 0.0};
    return state;
}

double norm(const StateVector& state) {
    double sum = 0.0;
    for (const auto& a : state.amplitudes) sum += std::norm(a);
    return std::sqrt(sum);
}

void apply_single(StateVector& state, const SingleQubitGate& gate, int q) {
    const std::size_t mask = std::size_t{1} << bit_position(state, q);
    const std::size_t dim = state.amplitudes.size();
    for (std::size_t i = 0; i < dim; ++i) {
        if (i & mask) continue;
        const std::complex<double> a = state.amplitudes[i];
        const std::complex<double> b = state.amplitudes[i | mask];
        state.amplitudes[i] = gate.m[0] * a + gate.m[1] * b;
        state.amplitudes[i | mask] = gate.m[2] * a + gate.m[3] * b;
    }
}

void apply_cnot(StateVector& state, int control, int target) {
    if (control == target)
        throw std::invalid_argument("apply_cnot: control and target must differ");
    const std::size_t cmask = std::size_t{1} << bit_position(state, control);
    const std::size_t tmask = std::size_t{1} << bit_position(state, target);
    const std::size_t dim = state.amplitudes.size();
    for (std::size_t i = 0; i < dim; ++i) {
        // swap each |c=1,t=0> amplitude with its |c=1,t=1> partner once
        if ((i & cmask) && !(i & tmask)) std::swap(state.amplitudes[i], state.amplitudes[i | tmask]);
    }
}

double expectation_z(const StateVector& state, int q) {
    const std::size_t mask = std::size_t{1} << bit_position(state, q);
    double value = 0.0;
    for (std::size_t i = 0; i < state.amplitudes.size(); ++i) {
        const double p = std::norm(state.amplitudes[i]);
        value += (i & mask) ? -p : p;
    }
    return value;
}

}  // namespace entsearch
