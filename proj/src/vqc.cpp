#include "entsearch/vqc.hpp"

#include <numbers>
#include <stdexcept>

namespace entsearch {

CircuitSpec::CircuitSpec(EntanglementMatrix beta_matrix)
    : n_q(beta_matrix.qubit_count()), beta(std::move(beta_matrix)) {
    const auto violations = validate(beta);
    if (!violations.empty())
        throw std::invalid_argument("CircuitSpec: invalid entanglement matrix: " + violations.front());
}

QuantumOutputs forward(const CircuitSpec& spec, const std::vector<double>& f,
                       const std::vector<double>& theta) {
    const int n = spec.n_q;
    if (static_cast<int>(f.size()) != n || static_cast<int>(theta.size()) != n)
        throw std::invalid_argument("forward: angle vector length must equal n_q");

    StateVector state = init_zero(n);
    const SingleQubitGate h = hadamard();
    for (int q = 1; q <= n; ++q) apply_single(state, h, q);
    for (int q = 1; q <= n; ++q) apply_single(state, rotation_y(f[q - 1]), q);
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            if (i != j && spec.beta.entry(i, j) == 1) apply_cnot(state, i, j);
    for (int q = 1; q <= n; ++q) apply_single(state, rotation_y(theta[q - 1]), q);

    QuantumOutputs out;
    out.z.resize(n);
    for (int q = 1; q <= n; ++q) out.z[q - 1] = expectation_z(state, q);
    return out;
}

QuantumGradients gradients(const CircuitSpec& spec, const std::vector<double>& f,
                           const std::vector<double>& theta) {
    const int n = spec.n_q;
    constexpr double shift = std::numbers::pi / 2.0;

    QuantumGradients grads;
    grads.n_q = n;
    grads.d_theta.resize(static_cast<std::size_t>(n) * n);
    grads.d_f.resize(static_cast<std::size_t>(n) * n);

    auto shifted_row = [&](std::vector<double> fs, std::vector<double> ts, bool is_theta, int i,
                           std::vector<double>& row) {
        auto& angle = is_theta ? ts[i] : fs[i];
        angle += shift;
        const QuantumOutputs plus = forward(spec, fs, ts);
        angle -= 2.0 * shift;
        const QuantumOutputs minus = forward(spec, fs, ts);
        for (int j = 0; j < n; ++j) row[static_cast<std::size_t>(i) * n + j] = (plus.z[j] - minus.z[j]) / 2.0;
    };

    for (int i = 0; i < n; ++i) {
        shifted_row(f, theta, true, i, grads.d_theta);
        shifted_row(f, theta, false, i, grads.d_f);
    }
    return grads;
}

}  // namespace entsearch
