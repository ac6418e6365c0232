#include "entsearch/features.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace entsearch {

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::Test: return "test";
        case Split::Unassigned: return "unassigned";
    }
    return "unassigned";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "validation") return Split::Validation;
    if (name == "test") return Split::Test;
    throw std::invalid_argument("unknown split tag '" + name + "'");
}

int FeatureTable::num_classes() const {
    int max_label = 1;
    for (int label : labels) max_label = std::max(max_label, label);
    return max_label + 1;
}

std::vector<std::size_t> FeatureTable::indices_of(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < splits.size(); ++i)
        if (splits[i] == s) out.push_back(i);
    return out;
}

std::vector<std::vector<double>> FeatureTable::rows_of(Split s) const {
    std::vector<std::vector<double>> out;
    for (std::size_t i : indices_of(s)) out.push_back(rows[i]);
    return out;
}

PcaModel pca_fit(const std::vector<std::vector<double>>& rows, int d) {
    const int s = static_cast<int>(rows.size());
    if (s < 2) throw std::invalid_argument("pca_fit: need at least 2 rows");
    const int dim = static_cast<int>(rows.front().size());
    if (d < 1 || d > std::min(s - 1, dim))
        throw std::invalid_argument("pca_fit: d must satisfy 1 <= d <= min(S-1, D)");

    Eigen::MatrixXd x(s, dim);
    for (int i = 0; i < s; ++i) {
        if (static_cast<int>(rows[i].size()) != dim)
            throw std::invalid_argument("pca_fit: ragged rows");
        for (int j = 0; j < dim; ++j) x(i, j) = rows[i][j];
    }

    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    if (x.norm() < 1e-12)
        throw std::invalid_argument("pca_fit: degenerate data, all rows identical");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
    const Eigen::MatrixXd& v = svd.matrixV();
    const Eigen::VectorXd& sigma = svd.singularValues();

    PcaModel model;
    model.input_dim = dim;
    model.output_dim = d;
    model.mean.assign(mean.data(), mean.data() + dim);
    model.components.resize(static_cast<std::size_t>(dim) * d);
    model.explained_variance.resize(d);
    for (int c = 0; c < d; ++c) {
        Eigen::VectorXd direction = v.col(c);
        // sign convention: the largest-magnitude entry is positive
        int peak = 0;
        direction.cwiseAbs().maxCoeff(&peak);
        if (direction(peak) < 0.0) direction = -direction;
        for (int j = 0; j < dim; ++j) model.components[static_cast<std::size_t>(c) * dim + j] = direction(j);
        model.explained_variance[c] = sigma(c) * sigma(c) / (s - 1);
    }
    return model;
}

std::vector<std::vector<double>> pca_transform(const PcaModel& model,
                                               const std::vector<std::vector<double>>& rows) {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != model.input_dim)
            throw std::invalid_argument("pca_transform: row dimension does not match model");
        std::vector<double> projected(model.output_dim, 0.0);
        for (int c = 0; c < model.output_dim; ++c) {
            double acc = 0.0;
            const double* direction = model.components.data() + static_cast<std::size_t>(c) * model.input_dim;
            for (int j = 0; j < model.input_dim; ++j) acc += (row[j] - model.mean[j]) * direction[j];
            projected[c] = acc;
        }
        out.push_back(std::move(projected));
    }
    return out;
}

nlohmann::json pca_model_to_json(const PcaModel& model) {
    return {{"D", model.input_dim},
            {"d", model.output_dim},
            {"mean", model.mean},
            {"components", model.components},
            {"explained_variance", model.explained_variance},
            {"standardized", false}};
}

PcaModel pca_model_from_json(const nlohmann::json& j) {
    PcaModel model;
    model.input_dim = j.at("D").get<int>();
    model.output_dim = j.at("d").get<int>();
    model.mean = j.at("mean").get<std::vector<double>>();
    model.components = j.at("components").get<std::vector<double>>();
    model.explained_variance = j.at("explained_variance").get<std::vector<double>>();
    if (model.mean.size() != static_cast<std::size_t>(model.input_dim) ||
        model.components.size() != static_cast<std::size_t>(model.input_dim) * model.output_dim)
        throw std::invalid_argument("pca model: inconsistent dimensions");
    return model;
}

void patient_split(FeatureTable& table, const std::array<double, 3>& fractions,
                   std::uint64_t seed) {
    for (double f : fractions)
        if (f <= 0.0) throw std::invalid_argument("patient_split: fractions must be positive");
    if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
        throw std::invalid_argument("patient_split: fractions must sum to 1");

    // canonical patient order first, so the result depends only on the
    // patient-id set and the seed, not on row order
    std::set<std::string> unique(table.patient_ids.begin(), table.patient_ids.end());
    std::vector<std::string> patients(unique.begin(), unique.end());
    const int p = static_cast<int>(patients.size());
    if (p < 3) throw std::invalid_argument("patient_split: need at least 3 patients");

    std::mt19937_64 rng(seed);
    std::shuffle(patients.begin(), patients.end(), rng);

    // largest-remainder allocation, then guarantee one patient per split
    std::array<int, 3> counts{};
    std::array<double, 3> remainders{};
    int assigned = 0;
    for (int s = 0; s < 3; ++s) {
        const double quota = fractions[s] * p;
        counts[s] = static_cast<int>(std::floor(quota));
        remainders[s] = quota - counts[s];
        assigned += counts[s];
    }
    while (assigned < p) {
        int best = 0;
        for (int s = 1; s < 3; ++s)
            if (remainders[s] > remainders[best]) best = s;
        ++counts[best];
        remainders[best] = -1.0;
        ++assigned;
    }
    for (int s = 0; s < 3; ++s) {
        while (counts[s] == 0) {
            int largest = 0;
            for (int t = 1; t < 3; ++t)
                if (counts[t] > counts[largest]) largest = t;
            --counts[largest];
            ++counts[s];
        }
    }

    std::array<Split, 3> tags{Split::Train, Split::Validation, Split::Test};
    std::vector<std::pair<std::string, Split>> assignment;
    int cursor = 0;
    for (int s = 0; s < 3; ++s)
        for (int c = 0; c < counts[s]; ++c) assignment.emplace_back(patients[cursor++], tags[s]);

    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto it = std::find_if(assignment.begin(), assignment.end(),
                                     [&](const auto& a) { return a.first == table.patient_ids[i]; });
        table.splits[i] = it->second;
    }
}

void SyntheticSpec::check() const {
    if (samples_per_class < 1 || dimension < 1 || patients_per_class < 1)
        throw std::invalid_argument("SyntheticSpec: counts and dimension must be positive");
    if (separation < 0.0) throw std::invalid_argument("SyntheticSpec: separation must be nonnegative");
}

FeatureTable synthesize_dataset(const SyntheticSpec& spec) {
    spec.check();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // random unit direction along which the class means are separated
    std::vector<double> direction(spec.dimension);
    double norm_sq = 0.0;
    for (double& v : direction) {
        v = gauss(rng);
        norm_sq += v * v;
    }
    const double inv_norm = 1.0 / std::sqrt(norm_sq);
    for (double& v : direction) v *= inv_norm;

    FeatureTable table;
    const int per_patient = spec.samples_per_class / spec.patients_per_class;
    const int leftover = spec.samples_per_class % spec.patients_per_class;
    for (int label = 0; label < 2; ++label) {
        const double offset = (label == 0 ? -0.5 : 0.5) * spec.separation;
        int sample = 0;
        for (int patient = 0; patient < spec.patients_per_class; ++patient) {
            const int block = per_patient + (patient < leftover ? 1 : 0);
            char id[32];
            std::snprintf(id, sizeof(id), "c%d-p%03d", label, patient);
            for (int s = 0; s < block; ++s, ++sample) {
                std::vector<double> row(spec.dimension);
                for (int j = 0; j < spec.dimension; ++j) row[j] = gauss(rng) + offset * direction[j];
                table.rows.push_back(std::move(row));
                table.labels.push_back(label);
                table.patient_ids.emplace_back(id);
                table.splits.push_back(Split::Unassigned);
            }
        }
    }
    return table;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

FeatureTable load_features(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_features: cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line) || line.empty())
        throw std::runtime_error("load_features: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "patient_id" || header[1] != "label")
        throw std::runtime_error("load_features: header must start with patient_id,label");
    const bool has_split = header.size() > 2 && header[2] == "split";
    const std::size_t feature_offset = has_split ? 3 : 2;
    const std::size_t dim = header.size() - feature_offset;
    if (dim == 0) throw std::runtime_error("load_features: no feature columns");

    FeatureTable table;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("load_features: line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(header.size()) + " cells, got " +
                                     std::to_string(cells.size()));
        table.patient_ids.push_back(cells[0]);
        try {
            std::size_t used = 0;
            const int label = std::stoi(cells[1], &used);
            if (used != cells[1].size() || label < 0) throw std::invalid_argument(cells[1]);
            table.labels.push_back(label);
        } catch (const std::exception&) {
            throw std::runtime_error("load_features: line " + std::to_string(line_no) +
                                     ": label must be a nonnegative integer class index, got '" +
                                     cells[1] + "'");
        }
        if (has_split) {
            try {
                table.splits.push_back(split_from_name(cells[2]));
            } catch (const std::exception& e) {
                throw std::runtime_error("load_features: line " + std::to_string(line_no) + ": " +
                                         e.what());
            }
        } else {
            table.splits.push_back(Split::Unassigned);
        }
        std::vector<double> row(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            const std::string& cell = cells[feature_offset + j];
            try {
                std::size_t used = 0;
                row[j] = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw std::runtime_error("load_features: line " + std::to_string(line_no) +
                                         ": non-numeric feature cell '" + cell + "'");
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

void save_features(const FeatureTable& table, const std::filesystem::path& path) {
    if (table.size() == 0) throw std::invalid_argument("save_features: empty table");
    const bool write_split = std::none_of(table.splits.begin(), table.splits.end(),
                                          [](Split s) { return s == Split::Unassigned; });
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_features: cannot open " + path.string());
    out << "patient_id,label";
    if (write_split) out << ",split";
    for (int j = 1; j <= table.dimension(); ++j) out << ",f" << j;
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < table.size(); ++i) {
        out << table.patient_ids[i] << ',' << table.labels[i];
        if (write_split) out << ',' << split_name(table.splits[i]);
        for (double v : table.rows[i]) out << ',' << v;
        out << '\n';
    }
}

}  // namespace entsearch
