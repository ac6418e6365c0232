#include "config.hpp"

#include <cstdlib>
#include <fstream>

#include "json.hpp"

namespace entsearch::cli {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& context) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw config_error("config: unknown field '" + key + "' in " + context);
    }
}

SearchCell parse_cell(const json& j, int n_q, std::size_t index) {
    const std::string context = "cells[" + std::to_string(index) + "]";
    check_keys(j, {"mode", "k", "E", "k_max", "runs"}, context);
    const std::string mode = j.at("mode").get<std::string>();
    SearchCell cell;
    if (mode == "constrained") {
        if (!j.contains("k")) throw config_error("config: " + context + ": constrained mode needs k");
        cell.spec = SamplingSpec::constrained(n_q, j["k"].get<int>());
    } else if (mode == "unconstrained") {
        if (!j.contains("E")) throw config_error("config: " + context + ": unconstrained mode needs E");
        cell.spec = SamplingSpec::unconstrained(n_q, j["E"].get<int>());
    } else if (mode == "semi_constrained") {
        if (!j.contains("k_max"))
            throw config_error("config: " + context + ": semi_constrained mode needs k_max");
        cell.spec = SamplingSpec::semi_constrained(n_q, j["k_max"].get<int>());
    } else {
        throw config_error("config: " + context + ": unknown mode '" + mode + "'");
    }
    cell.n_runs = j.value("runs", 1);
    if (cell.n_runs < 1) throw config_error("config: " + context + ": runs must be >= 1");
    return cell;
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw config_error("config: invalid JSON: " + std::string(e.what()));
    }

    try {
        check_keys(j,
                   {"version", "dataset", "n_q", "pca_dim", "train", "cells", "split_fractions",
                    "ensemble_top_r", "output_dir", "master_seed"},
                   "top level");
        if (j.value("version", 0) != 1) throw config_error("config: version must be 1");

        ExperimentConfig cfg;
        cfg.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

        const json& dataset = j.at("dataset");
        check_keys(dataset, {"path", "synthetic"}, "dataset");
        if (dataset.contains("path") == dataset.contains("synthetic"))
            throw config_error("config: dataset needs exactly one of path or synthetic");
        if (dataset.contains("path")) {
            cfg.dataset_path = dataset["path"].get<std::string>();
        } else {
            const json& s = dataset["synthetic"];
            check_keys(s, {"samples_per_class", "dimension", "separation", "patients_per_class", "seed"},
                       "dataset.synthetic");
            SyntheticSpec spec;
            spec.samples_per_class = s.at("samples_per_class").get<int>();
            spec.dimension = s.at("dimension").get<int>();
            spec.separation = s.at("separation").get<double>();
            spec.patients_per_class = s.at("patients_per_class").get<int>();
            spec.seed = s.value("seed", std::uint64_t{0});
            spec.check();
            cfg.synthetic = spec;
        }

        cfg.n_q = j.value("n_q", 8);
        if (cfg.n_q < 1) throw config_error("config: n_q must be positive");
        if (j.contains("pca_dim")) {
            cfg.pca_dim = j["pca_dim"].get<int>();
            if (*cfg.pca_dim < 1) throw config_error("config: pca_dim must be positive");
        }

        if (j.contains("train")) {
            const json& t = j["train"];
            check_keys(t, {"epochs", "learning_rate", "decay_gamma", "decay_every", "batch_size"},
                       "train");
            cfg.train.epochs = t.value("epochs", cfg.train.epochs);
            cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
            cfg.train.decay_gamma = t.value("decay_gamma", cfg.train.decay_gamma);
            cfg.train.decay_every = t.value("decay_every", cfg.train.decay_every);
            cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
            cfg.train.check();
        }

        if (j.contains("cells")) {
            const json& cells = j["cells"];
            if (!cells.is_array()) throw config_error("config: cells must be an array");
            for (std::size_t i = 0; i < cells.size(); ++i)
                cfg.cells.push_back(parse_cell(cells[i], cfg.n_q, i));
        }

        if (j.contains("split_fractions")) {
            const auto f = j["split_fractions"].get<std::vector<double>>();
            if (f.size() != 3) throw config_error("config: split_fractions must have 3 entries");
            cfg.split_fractions = {f[0], f[1], f[2]};
        }
        if (j.contains("ensemble_top_r"))
            cfg.ensemble_top_r = j["ensemble_top_r"].get<std::vector<double>>();

        cfg.output_dir = j.at("output_dir").get<std::string>();
        cfg.master_seed = j.value("master_seed", std::uint64_t{0});
        return cfg;
    } catch (const CliError&) {
        throw;
    } catch (const std::exception& e) {
        throw config_error("config: " + std::string(e.what()));
    }
}

std::uint64_t resolve_master_seed(const ExperimentConfig& cfg,
                                  const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("ENTANGLE_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw config_error("ENTANGLE_SEED must be a nonnegative integer, got '" +
                               std::string(env) + "'");
        }
    }
    return cfg.master_seed;
}

PreparedData prepare_dataset(const ExperimentConfig& cfg, std::uint64_t master_seed) {
    PreparedData data;
    try {
        if (cfg.dataset_path) {
            std::filesystem::path p(*cfg.dataset_path);
            if (p.is_relative()) p = cfg.base_dir / p;
            data.table = load_features(p);
        } else {
            data.table = synthesize_dataset(*cfg.synthetic);
        }
    } catch (const std::exception& e) {
        throw config_error(e.what());
    }

    const auto unassigned = data.table.indices_of(Split::Unassigned);
    if (unassigned.size() == data.table.size()) {
        patient_split(data.table, cfg.split_fractions, master_seed);
    } else if (!unassigned.empty()) {
        throw config_error("dataset: split tags must cover all rows or none");
    }

    if (cfg.pca_dim) {
        try {
            data.pca = pca_fit(data.table.rows_of(Split::Train), *cfg.pca_dim);
        } catch (const std::exception& e) {
            throw config_error(std::string("pca: ") + e.what());
        }
        data.table.rows = pca_transform(*data.pca, data.table.rows);
    }
    return data;
}

}  // namespace entsearch::cli
