#include "entsearch/entanglement.hpp"

#include <gmp.h>

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace entsearch {

EntanglementMatrix::EntanglementMatrix(int n_q) : n_q_(n_q) {
    if (n_q < 1) throw std::invalid_argument("EntanglementMatrix: n_q must be positive");
    vals_.assign(static_cast<std::size_t>(n_q) * n_q, 0);
}

EntanglementMatrix EntanglementMatrix::from_grid(const std::vector<std::vector<int>>& grid) {
    if (grid.empty()) throw std::invalid_argument("from_grid: empty grid");
    const int n = static_cast<int>(grid.size());
    EntanglementMatrix m(n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(grid[i].size()) != n)
            throw std::invalid_argument("from_grid: grid is not square");
        for (int j = 0; j < n; ++j) m.vals_[static_cast<std::size_t>(i) * n + j] = grid[i][j];
    }
    return m;
}

int EntanglementMatrix::entry(int control, int target) const {
    if (control < 1 || control > n_q_ || target < 1 || target > n_q_)
        throw std::out_of_range("EntanglementMatrix::entry: index out of range");
    return vals_[static_cast<std::size_t>(control - 1) * n_q_ + (target - 1)];
}

void EntanglementMatrix::set_entry(int control, int target, int value) {
    if (control < 1 || control > n_q_ || target < 1 || target > n_q_)
        throw std::out_of_range("EntanglementMatrix::set_entry: index out of range");
    vals_[static_cast<std::size_t>(control - 1) * n_q_ + (target - 1)] = value;
}

SamplingSpec SamplingSpec::unconstrained(int n_q, int total_entanglements) {
    SamplingSpec s;
    s.n_q = n_q;
    s.mode = Mode::Unconstrained;
    s.total = total_entanglements;
    s.check();
    return s;
}

SamplingSpec SamplingSpec::constrained(int n_q, int per_qubit) {
    SamplingSpec s;
    s.n_q = n_q;
    s.mode = Mode::Constrained;
    s.per_qubit = per_qubit;
    s.check();
    return s;
}

SamplingSpec SamplingSpec::semi_constrained(int n_q, int per_qubit_max) {
    SamplingSpec s;
    s.n_q = n_q;
    s.mode = Mode::SemiConstrained;
    s.per_qubit_max = per_qubit_max;
    s.check();
    return s;
}

void SamplingSpec::check() const {
    if (n_q < 1) throw std::invalid_argument("SamplingSpec: n_q must be positive");
    switch (mode) {
        case Mode::Unconstrained:
            if (total < 0 || total > n_q * (n_q - 1))
                throw std::invalid_argument("SamplingSpec: E must satisfy 0 <= E <= n_q(n_q-1)");
            break;
        case Mode::Constrained:
            if (per_qubit < 1 || per_qubit > n_q - 1)
                throw std::invalid_argument("SamplingSpec: k must satisfy 1 <= k <= n_q-1");
            break;
        case Mode::SemiConstrained:
            if (per_qubit_max < 0 || per_qubit_max > n_q - 1)
                throw std::invalid_argument("SamplingSpec: k_max must satisfy 0 <= k_max <= n_q-1");
            break;
    }
}

int per_qubit_count(const EntanglementMatrix& beta, int control) {
    const int n = beta.qubit_count();
    if (control < 1 || control > n) throw std::out_of_range("per_qubit_count: index out of range");
    int count = 0;
    for (int j = 1; j <= n; ++j)
        if (j != control) count += beta.entry(control, j);
    return count;
}

int total_entanglements(const EntanglementMatrix& beta) {
    int count = 0;
    for (int i = 1; i <= beta.qubit_count(); ++i) count += per_qubit_count(beta, i);
    return count;
}

double density(const EntanglementMatrix& beta) {
    const int n = beta.qubit_count();
    if (n < 2) throw std::invalid_argument("density: n_q must be at least 2");
    return 100.0 * total_entanglements(beta) / (static_cast<double>(n) * (n - 1));
}

double constrained_density(int n_q, int k) {
    if (n_q < 2) throw std::invalid_argument("constrained_density: n_q must be at least 2");
    if (k < 0 || k > n_q - 1)
        throw std::invalid_argument("constrained_density: k must satisfy 0 <= k <= n_q-1");
    return 100.0 * k / (n_q - 1);
}

std::string count_configurations(int n_q, bool symmetric) {
    if (n_q < 1) throw std::invalid_argument("count_configurations: n_q must be positive");
    const unsigned long cells = static_cast<unsigned long>(n_q) * (n_q - 1);
    const unsigned long exponent = symmetric ? cells / 2 : cells;
    mpz_t count;
    mpz_init(count);
    mpz_ui_pow_ui(count, 2, exponent);
    char* digits = mpz_get_str(nullptr, 10, count);
    std::string out(digits);
    void (*free_fn)(void*, std::size_t);
    mp_get_memory_functions(nullptr, nullptr, &free_fn);
    free_fn(digits, out.size() + 1);
    mpz_clear(count);
    return out;
}

namespace {

// First `count` entries of a seeded Fisher-Yates shuffle; uniform over
// count-subsets (and their orderings) of `pool`.
std::vector<int> draw_without_replacement(std::vector<int> pool, int count, std::mt19937_64& rng) {
    for (int t = 0; t < count; ++t) {
        std::uniform_int_distribution<int> pick(t, static_cast<int>(pool.size()) - 1);
        std::swap(pool[t], pool[pick(rng)]);
    }
    pool.resize(count);
    return pool;
}

void fill_row(EntanglementMatrix& m, int control, int count, std::mt19937_64& rng) {
    std::vector<int> targets;
    for (int j = 1; j <= m.qubit_count(); ++j)
        if (j != control) targets.push_back(j);
    for (int j : draw_without_replacement(std::move(targets), count, rng))
        m.set_entry(control, j, 1);
}

}  // namespace

EntanglementMatrix sample(const SamplingSpec& spec, std::mt19937_64& rng) {
    spec.check();
    const int n = spec.n_q;
    EntanglementMatrix m(n);
    switch (spec.mode) {
        case SamplingSpec::Mode::Unconstrained: {
            std::vector<int> cells;  // off-diagonal cells in row-major order
            for (int i = 1; i <= n; ++i)
                for (int j = 1; j <= n; ++j)
                    if (i != j) cells.push_back((i - 1) * n + (j - 1));
            for (int cell : draw_without_replacement(std::move(cells), spec.total, rng))
                m.set_entry(cell / n + 1, cell % n + 1, 1);
            break;
        }
        case SamplingSpec::Mode::Constrained:
            for (int i = 1; i <= n; ++i) fill_row(m, i, spec.per_qubit, rng);
            break;
        case SamplingSpec::Mode::SemiConstrained: {
            std::uniform_int_distribution<int> row_count(0, spec.per_qubit_max);
            for (int i = 1; i <= n; ++i) fill_row(m, i, row_count(rng), rng);
            break;
        }
    }
    return m;
}

EntanglementMatrix conventional(TopologyKind kind, int n_q) {
    if (n_q < 2) throw std::invalid_argument("conventional: n_q must be at least 2");
    EntanglementMatrix m(n_q);
    switch (kind) {
        case TopologyKind::Ring:
            for (int i = 1; i < n_q; ++i) m.set_entry(i, i + 1, 1);
            m.set_entry(n_q, 1, 1);
            break;
        case TopologyKind::NearestNeighbor:
            for (int i = 1; i < n_q; ++i) m.set_entry(i, i + 1, 1);
            break;
        case TopologyKind::NoEntanglement:
            break;
        case TopologyKind::FullyEntangled:
            for (int i = 1; i <= n_q; ++i)
                for (int j = 1; j <= n_q; ++j)
                    if (i != j) m.set_entry(i, j, 1);
            break;
    }
    return m;
}

std::vector<std::string> validate(const EntanglementMatrix& beta) {
    std::vector<std::string> violations;
    const int n = beta.qubit_count();
    for (int i = 1; i <= n; ++i) {
        if (beta.entry(i, i) != 0)
            violations.push_back("self-entanglement at qubit " + std::to_string(i));
        for (int j = 1; j <= n; ++j) {
            const int v = beta.entry(i, j);
            if (v != 0 && v != 1)
                violations.push_back("non-binary entry " + std::to_string(v) + " at (" +
                                     std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
    return violations;
}

std::string serialize(const EntanglementMatrix& beta) {
    std::string out;
    const int n = beta.qubit_count();
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            if (j > 1) out += ',';
            out += std::to_string(beta.entry(i, j));
        }
        out += '\n';
    }
    return out;
}

EntanglementMatrix parse(const std::string& text) {
    std::vector<std::vector<int>> grid;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<int> row;
        std::istringstream cells(line);
        std::string token;
        while (std::getline(cells, token, ',')) {
            if (token == "0")
                row.push_back(0);
            else if (token == "1")
                row.push_back(1);
            else
                throw std::invalid_argument("parse: non-binary token '" + token + "'");
        }
        grid.push_back(std::move(row));
    }
    if (grid.empty()) throw std::invalid_argument("parse: empty input");
    const std::size_t n = grid.size();
    for (const auto& row : grid)
        if (row.size() != n) throw std::invalid_argument("parse: ragged rows");
    for (std::size_t i = 0; i < n; ++i)
        if (grid[i][i] != 0) throw std::invalid_argument("parse: nonzero diagonal");
    return EntanglementMatrix::from_grid(grid);
}

const char* topology_name(TopologyKind kind) {
    switch (kind) {
        case TopologyKind::Ring: return "ring";
        case TopologyKind::NearestNeighbor: return "nearest_neighbor";
        case TopologyKind::NoEntanglement: return "no_entanglement";
        case TopologyKind::FullyEntangled: return "fully_entangled";
    }
    return "unknown";
}

const char* mode_name(SamplingSpec::Mode mode) {
    switch (mode) {
        case SamplingSpec::Mode::Unconstrained: return "unconstrained";
        case SamplingSpec::Mode::Constrained: return "constrained";
        case SamplingSpec::Mode::SemiConstrained: return "semi_constrained";
    }
    return "unknown";
}

ConfigurationDescriptor describe(const EntanglementMatrix& beta, const SamplingSpec& spec,
                                 std::uint64_t seed) {
    ConfigurationDescriptor d;
    d.matrix = beta;
    d.mode = mode_name(spec.mode);
    d.seed = seed;
    switch (spec.mode) {
        case SamplingSpec::Mode::Unconstrained: d.total = spec.total; break;
        case SamplingSpec::Mode::Constrained: d.per_qubit = spec.per_qubit; break;
        case SamplingSpec::Mode::SemiConstrained: d.per_qubit_max = spec.per_qubit_max; break;
    }
    return d;
}

ConfigurationDescriptor describe(const EntanglementMatrix& beta, TopologyKind kind) {
    ConfigurationDescriptor d;
    d.matrix = beta;
    d.mode = topology_name(kind);
    return d;
}

nlohmann::json descriptor_to_json(const ConfigurationDescriptor& desc) {
    nlohmann::json j;
    j["n_q"] = desc.matrix.qubit_count();
    j["mode"] = desc.mode;
    if (desc.per_qubit) j["k"] = *desc.per_qubit;
    if (desc.total) j["E"] = *desc.total;
    if (desc.per_qubit_max) j["k_max"] = *desc.per_qubit_max;
    if (desc.seed) j["seed"] = *desc.seed;
    j["matrix_csv"] = serialize(desc.matrix);
    return j;
}

ConfigurationDescriptor descriptor_from_json(const nlohmann::json& j) {
    ConfigurationDescriptor d;
    d.matrix = parse(j.at("matrix_csv").get<std::string>());
    if (j.at("n_q").get<int>() != d.matrix.qubit_count())
        throw std::invalid_argument("descriptor: n_q does not match matrix_csv");
    d.mode = j.at("mode").get<std::string>();
    if (j.contains("k")) d.per_qubit = j["k"].get<int>();
    if (j.contains("E")) d.total = j["E"].get<int>();
    if (j.contains("k_max")) d.per_qubit_max = j["k_max"].get<int>();
    if (j.contains("seed")) d.seed = j["seed"].get<std::uint64_t>();
    return d;
}

}  // namespace entsearch
