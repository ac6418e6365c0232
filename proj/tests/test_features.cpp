#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "entsearch/features.hpp"
#include "support/jacobi.hpp"

using namespace entsearch;
using namespace entsearch::testsupport;

namespace {

std::vector<std::vector<double>> random_rows(int s, int d, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    std::vector<std::vector<double>> rows(s, std::vector<double>(d));
    for (auto& row : rows)
        for (double& v : row) v = gauss(rng);
    return rows;
}

// min over sign of the Euclidean gap between two unit vectors
double sign_free_gap(const std::vector<double>& a, const std::vector<double>& b) {
    double plus = 0.0, minus = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        plus += (a[i] - b[i]) * (a[i] - b[i]);
        minus += (a[i] + b[i]) * (a[i] + b[i]);
    }
    return std::sqrt(std::min(plus, minus));
}

// Nearest-class-mean classifier along the estimated separation direction;
// independent of the library's model code.
double projection_classifier_accuracy(const FeatureTable& table) {
    const int d = table.dimension();
    std::vector<double> mean0(d, 0.0), mean1(d, 0.0);
    int n0 = 0, n1 = 0;
    for (std::size_t i : table.indices_of(Split::Train)) {
        auto& m = table.labels[i] == 0 ? mean0 : mean1;
        (table.labels[i] == 0 ? n0 : n1)++;
        for (int j = 0; j < d; ++j) m[j] += table.rows[i][j];
    }
    for (int j = 0; j < d; ++j) {
        mean0[j] /= n0;
        mean1[j] /= n1;
    }
    std::size_t correct = 0;
    const auto test = table.indices_of(Split::Test);
    for (std::size_t i : test) {
        double proj = 0.0, mid = 0.0;
        for (int j = 0; j < d; ++j) {
            proj += table.rows[i][j] * (mean1[j] - mean0[j]);
            mid += 0.5 * (mean0[j] + mean1[j]) * (mean1[j] - mean0[j]);
        }
        if ((proj > mid ? 1 : 0) == table.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / test.size();
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("pca_fit on axis-aligned data") {
    const std::vector<std::vector<double>> rows{{-2, 0}, {-1, 0}, {1, 0}, {2, 0}};
    const PcaModel model = pca_fit(rows, 1);
    CHECK(std::abs(model.components[0] - 1.0) < 1e-12);  // sign convention
    CHECK(std::abs(model.components[1]) < 1e-12);
    CHECK(model.explained_variance[0] == doctest::Approx(10.0 / 3.0).epsilon(1e-12));

    // the training mean projects to the origin
    const auto projected = pca_transform(model, {model.mean});
    CHECK(std::abs(projected[0][0]) < 1e-12);
}

TEST_CASE("pca_fit matches the covariance-eigendecomposition oracle") {
    std::mt19937_64 rng(41);
    const auto rows = random_rows(10, 5, rng);
    const PcaModel model = pca_fit(rows, 3);
    const EigenPairs oracle = jacobi_eigen_symmetric(sample_covariance(rows));
    for (int c = 0; c < 3; ++c) {
        std::vector<double> component(model.components.begin() + c * 5,
                                       model.components.begin() + (c + 1) * 5);
        CHECK(sign_free_gap(component, oracle.vectors[c]) < 1e-8);
        CHECK(std::abs(model.explained_variance[c] - oracle.values[c]) < 1e-8);
    }
}

TEST_CASE("pca components are orthonormal, variances descending") {
    std::mt19937_64 rng(43);
    const auto rows = random_rows(30, 8, rng);
    const PcaModel model = pca_fit(rows, 5);
    for (int a = 0; a < 5; ++a) {
        for (int b = 0; b < 5; ++b) {
            double dot = 0.0;
            for (int j = 0; j < 8; ++j)
                dot += model.components[a * 8 + j] * model.components[b * 8 + j];
            CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-10);
        }
    }
    for (int c = 1; c < 5; ++c)
        CHECK(model.explained_variance[c] <= model.explained_variance[c - 1]);
}

TEST_CASE("pca_transform decorrelates the training data") {
    std::mt19937_64 rng(47);
    const auto rows = random_rows(40, 6, rng);
    const PcaModel model = pca_fit(rows, 4);
    const auto projected = pca_transform(model, rows);
    const auto cov = sample_covariance(projected);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            if (a != b) CHECK(std::abs(cov[a][b]) < 1e-8);
}

TEST_CASE("full-rank pca is an isometry of centered data") {
    std::mt19937_64 rng(53);
    const auto rows = random_rows(12, 4, rng);
    const PcaModel model = pca_fit(rows, 4);
    const auto projected = pca_transform(model, rows);
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = a + 1; b < rows.size(); ++b) {
            double before = 0.0, after = 0.0;
            for (int j = 0; j < 4; ++j) {
                before += (rows[a][j] - rows[b][j]) * (rows[a][j] - rows[b][j]);
                after += (projected[a][j] - projected[b][j]) * (projected[a][j] - projected[b][j]);
            }
            CHECK(std::abs(std::sqrt(before) - std::sqrt(after)) < 1e-8);
        }
}

TEST_CASE("a row displaced along component 1 projects to a unit vector") {
    std::mt19937_64 rng(59);
    const auto rows = random_rows(15, 5, rng);
    const PcaModel model = pca_fit(rows, 3);
    std::vector<double> probe(5);
    for (int j = 0; j < 5; ++j) probe[j] = model.mean[j] + model.components[j];
    const auto projected = pca_transform(model, {probe});
    CHECK(std::abs(projected[0][0] - 1.0) < 1e-10);
    CHECK(std::abs(projected[0][1]) < 1e-10);
    CHECK(std::abs(projected[0][2]) < 1e-10);
}

TEST_CASE("pca_fit input validation") {
    std::mt19937_64 rng(61);
    const auto rows = random_rows(6, 4, rng);
    CHECK_THROWS_AS(pca_fit(rows, 0), std::invalid_argument);
    CHECK_THROWS_AS(pca_fit(rows, 5), std::invalid_argument);   // d > D
    CHECK_THROWS_AS(pca_fit(rows, 6), std::invalid_argument);   // d > S-1
    CHECK_THROWS_AS(pca_fit({{1, 1}, {1, 1}, {1, 1}}, 1), std::invalid_argument);  // degenerate
    CHECK_THROWS_AS(pca_transform(pca_fit(rows, 2), {{1, 2}}), std::invalid_argument);
}

TEST_CASE("pca model json round-trip") {
    std::mt19937_64 rng(67);
    const PcaModel model = pca_fit(random_rows(10, 4, rng), 2);
    const PcaModel back = pca_model_from_json(nlohmann::json::parse(pca_model_to_json(model).dump()));
    CHECK(back.mean == model.mean);
    CHECK(back.components == model.components);
    CHECK(back.explained_variance == model.explained_variance);
}

TEST_CASE("patient_split proportions and leakage ban") {
    FeatureTable table;
    for (int p = 0; p < 100; ++p)
        for (int s = 0; s < 3; ++s) {
            table.rows.push_back({double(p), double(s)});
            table.labels.push_back(p % 2);
            table.patient_ids.push_back("patient" + std::to_string(p));
            table.splits.push_back(Split::Unassigned);
        }
    patient_split(table, {0.5, 0.25, 0.25}, 7);

    std::set<std::string> train, val, test;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& id = table.patient_ids[i];
        if (table.splits[i] == Split::Train) train.insert(id);
        if (table.splits[i] == Split::Validation) val.insert(id);
        if (table.splits[i] == Split::Test) test.insert(id);
    }
    CHECK(train.size() == 50);
    CHECK(val.size() == 25);
    CHECK(test.size() == 25);
    for (const auto& id : train) {
        CHECK(val.count(id) == 0);
        CHECK(test.count(id) == 0);
    }
    for (const auto& id : val) CHECK(test.count(id) == 0);
}

TEST_CASE("patient_split minimal case and errors") {
    FeatureTable table;
    for (int p = 0; p < 3; ++p) {
        table.rows.push_back({double(p)});
        table.labels.push_back(0);
        table.patient_ids.push_back("p" + std::to_string(p));
        table.splits.push_back(Split::Unassigned);
    }
    patient_split(table, {0.9, 0.05, 0.05}, 3);
    std::set<Split> seen(table.splits.begin(), table.splits.end());
    CHECK(seen.size() == 3);  // each split holds exactly one patient

    FeatureTable two = table;
    two.rows.pop_back();
    two.labels.pop_back();
    two.patient_ids.pop_back();
    two.splits.pop_back();
    CHECK_THROWS_AS(patient_split(two, {0.5, 0.25, 0.25}, 3), std::invalid_argument);
    CHECK_THROWS_AS(patient_split(table, {0.5, 0.25, 0.3}, 3), std::invalid_argument);
    CHECK_THROWS_AS(patient_split(table, {1.0, -0.5, 0.5}, 3), std::invalid_argument);
}

TEST_CASE("patient_split is deterministic and row-order invariant") {
    SyntheticSpec spec;
    spec.samples_per_class = 30;
    spec.dimension = 3;
    spec.separation = 1.0;
    spec.patients_per_class = 10;
    spec.seed = 71;
    FeatureTable a = synthesize_dataset(spec);
    FeatureTable b = a;
    // reverse row order in b
    std::reverse(b.rows.begin(), b.rows.end());
    std::reverse(b.labels.begin(), b.labels.end());
    std::reverse(b.patient_ids.begin(), b.patient_ids.end());

    patient_split(a, {0.5, 0.25, 0.25}, 9);
    patient_split(b, {0.5, 0.25, 0.25}, 9);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& id = a.patient_ids[i];
        for (std::size_t j = 0; j < b.size(); ++j)
            if (b.patient_ids[j] == id) CHECK(a.splits[i] == b.splits[j]);
    }

    FeatureTable c = synthesize_dataset(spec);
    patient_split(c, {0.5, 0.25, 0.25}, 9);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.splits[i] == c.splits[i]);
}

TEST_CASE("synthetic separation controls attainable accuracy") {
    auto make = [](double separation) {
        SyntheticSpec spec;
        spec.samples_per_class = 120;
        spec.dimension = 20;
        spec.separation = separation;
        spec.patients_per_class = 12;
        spec.seed = 73;
        FeatureTable table = synthesize_dataset(spec);
        patient_split(table, {0.5, 0.25, 0.25}, 73);
        return table;
    };

    const double acc0 = projection_classifier_accuracy(make(0.0));
    const double acc2 = projection_classifier_accuracy(make(2.0));
    const double acc10 = projection_classifier_accuracy(make(10.0));

    CHECK(acc10 > 0.99);
    // indistinguishable classes: no classifier beats chance plus binomial noise
    const double n_test = 120.0 * 0.5;
    CHECK(acc0 <= 0.5 + 3.0 * std::sqrt(0.25 / n_test));
    CHECK(acc0 <= acc2);
    CHECK(acc2 <= acc10);
}

TEST_CASE("synthesize_dataset is deterministic and validates its spec") {
    SyntheticSpec spec;
    spec.samples_per_class = 10;
    spec.dimension = 4;
    spec.separation = 1.0;
    spec.patients_per_class = 2;
    spec.seed = 79;
    const FeatureTable a = synthesize_dataset(spec);
    const FeatureTable b = synthesize_dataset(spec);
    CHECK(a.rows == b.rows);
    CHECK(a.patient_ids == b.patient_ids);

    SyntheticSpec bad = spec;
    bad.dimension = 0;
    CHECK_THROWS_AS(synthesize_dataset(bad), std::invalid_argument);
}

TEST_CASE("feature csv round-trip") {
    const auto path = temp_file("entsearch_test_roundtrip.csv");
    SyntheticSpec spec;
    spec.samples_per_class = 8;
    spec.dimension = 5;
    spec.separation = 2.0;
    spec.patients_per_class = 2;
    spec.seed = 83;
    FeatureTable table = synthesize_dataset(spec);
    patient_split(table, {0.5, 0.25, 0.25}, 83);

    save_features(table, path);
    const FeatureTable back = load_features(path);
    REQUIRE(back.size() == table.size());
    CHECK(back.labels == table.labels);
    CHECK(back.patient_ids == table.patient_ids);
    CHECK(back.splits == table.splits);
    for (std::size_t i = 0; i < table.size(); ++i)
        for (int j = 0; j < table.dimension(); ++j)
            CHECK(std::abs(back.rows[i][j] - table.rows[i][j]) <= 1e-15);
    std::filesystem::remove(path);
}

TEST_CASE("feature csv parsing") {
    const auto path = temp_file("entsearch_test_parse.csv");
    {
        std::ofstream out(path);
        out << "patient_id,label,f1,f2\np1,0,0.5,1.5\np2,1,-0.25,2\n";
    }
    const FeatureTable table = load_features(path);
    REQUIRE(table.size() == 2);
    CHECK(table.labels == std::vector<int>{0, 1});
    CHECK(table.rows[0] == std::vector<double>{0.5, 1.5});
    CHECK(table.splits[0] == Split::Unassigned);

    {
        std::ofstream out(path);
        out << "patient_id,label,f1\np1,MI,0.5\n";
    }
    CHECK_THROWS_WITH_AS(load_features(path),
                         doctest::Contains("label must be a nonnegative integer"),
                         std::runtime_error);

    {
        std::ofstream out(path);
        out << "patient_id,label,f1\np1,0,abc\n";
    }
    CHECK_THROWS_WITH_AS(load_features(path), doctest::Contains("line 2"), std::runtime_error);

    {
        std::ofstream out(path);
        out << "patient_id,label,split,f1\np1,0,holdout,0.5\n";
    }
    CHECK_THROWS_WITH_AS(load_features(path), doctest::Contains("unknown split"), std::runtime_error);

    {
        std::ofstream out(path);
        out << "id,label,f1\np1,0,0.5\n";
    }
    CHECK_THROWS_WITH_AS(load_features(path), doctest::Contains("header"), std::runtime_error);

    std::filesystem::remove(path);
}
