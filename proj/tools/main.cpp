#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "config.hpp"
#include "entsearch/entanglement.hpp"
#include "entsearch/experiment.hpp"
#include "entsearch/features.hpp"
#include "entsearch/nnet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace entsearch;
using namespace entsearch::cli;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw CliError(1, "cannot open " + path.string() + " for writing");
    out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

fs::path ensure_output_dir(const ExperimentConfig& cfg) {
    fs::path dir(cfg.output_dir);
    if (dir.is_relative()) dir = cfg.base_dir / dir;
    fs::create_directories(dir);
    return dir;
}

void write_beta_files(const ConfigurationDescriptor& desc, const std::string& out_prefix) {
    write_text(out_prefix + ".csv", serialize(desc.matrix));
    write_json(out_prefix + ".json", descriptor_to_json(desc));
}

void print_beta_summary(const EntanglementMatrix& beta) {
    std::cout << "mu=" << density(beta) << "\n";
    std::cout << "E=" << total_entanglements(beta) << "\n";
    std::cout << "row_counts=";
    for (int i = 1; i <= beta.qubit_count(); ++i)
        std::cout << (i > 1 ? "," : "") << per_qubit_count(beta, i);
    std::cout << "\n";
}

struct SampleArgs {
    int n_q = 8;
    std::string mode;
    std::optional<int> k, e, k_max;
    std::uint64_t seed = 0;
    std::string out = "beta";
};

int cmd_sample(const SampleArgs& args) {
    int given = int(args.k.has_value()) + int(args.e.has_value()) + int(args.k_max.has_value());
    if (given == 0) throw config_error("sample: one of --k, --e, --k-max is required");
    if (given > 1) throw config_error("sample: --k, --e and --k-max are mutually exclusive");

    SamplingSpec spec;
    try {
        if (args.k) {
            if (!args.mode.empty() && args.mode != "constrained")
                throw config_error("sample: --k conflicts with --mode " + args.mode);
            spec = SamplingSpec::constrained(args.n_q, *args.k);
        } else if (args.e) {
            if (!args.mode.empty() && args.mode != "unconstrained")
                throw config_error("sample: --e conflicts with --mode " + args.mode);
            spec = SamplingSpec::unconstrained(args.n_q, *args.e);
        } else {
            if (!args.mode.empty() && args.mode != "semi_constrained" && args.mode != "semi")
                throw config_error("sample: --k-max conflicts with --mode " + args.mode);
            spec = SamplingSpec::semi_constrained(args.n_q, *args.k_max);
        }
    } catch (const CliError&) {
        throw;
    } catch (const std::exception& e) {
        throw config_error(e.what());
    }

    std::mt19937_64 rng(args.seed);
    const EntanglementMatrix beta = sample(spec, rng);
    write_beta_files(describe(beta, spec, args.seed), args.out);
    print_beta_summary(beta);
    return 0;
}

int cmd_topology(const std::string& kind_name, int n_q, const std::string& out) {
    static const std::map<std::string, TopologyKind> kinds = {
        {"ring", TopologyKind::Ring},
        {"nearest", TopologyKind::NearestNeighbor},
        {"nearest_neighbor", TopologyKind::NearestNeighbor},
        {"none", TopologyKind::NoEntanglement},
        {"no_entanglement", TopologyKind::NoEntanglement},
        {"full", TopologyKind::FullyEntangled},
        {"fully_entangled", TopologyKind::FullyEntangled}};
    const auto it = kinds.find(kind_name);
    if (it == kinds.end()) throw config_error("topology: unknown kind '" + kind_name + "'");
    EntanglementMatrix beta;
    try {
        beta = conventional(it->second, n_q);
    } catch (const std::exception& e) {
        throw config_error(e.what());
    }
    write_beta_files(describe(beta, it->second), out);
    print_beta_summary(beta);
    return 0;
}

ConfigurationDescriptor load_beta_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open beta file " + path.string());
    try {
        if (path.extension() == ".csv") {
            std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            ConfigurationDescriptor desc;
            desc.matrix = parse(text);
            desc.mode = "file";
            return desc;
        }
        json j;
        in >> j;
        return descriptor_from_json(j);
    } catch (const std::exception& e) {
        throw config_error("beta file " + path.string() + ": " + e.what());
    }
}

int cmd_train(const std::string& config_path, const std::string& beta_path,
              const std::optional<std::uint64_t>& seed_flag, const std::string& run_id) {
    const ExperimentConfig cfg = load_config(config_path);
    const std::uint64_t master = resolve_master_seed(cfg, seed_flag);
    const ConfigurationDescriptor desc = load_beta_file(beta_path);
    const PreparedData data = prepare_dataset(cfg, master);
    const fs::path out = ensure_output_dir(cfg);
    if (data.pca) write_json(out / "pca_model.json", pca_model_to_json(*data.pca));

    const std::uint64_t seed = derive_run_seed(master, 0, 0);
    DressedNet net;
    TrainHistory history;
    RunRecord record;
    try {
        record = run_single(desc, seed, data.table, cfg.train, desc.matrix.qubit_count() <= 8,
                            run_id, "", &net, &history);
    } catch (const std::exception& e) {
        throw training_error(e.what());
    }
    save_records({record}, out / (run_id + "_record.jsonl"));
    write_json(out / (run_id + "_checkpoint.json"), checkpoint_to_json(net, desc, cfg.train, history));
    std::cerr << "[train] " << run_id << " val=" << record.val_accuracy
              << " test=" << record.test_accuracy << "\n";
    return 0;
}

int cmd_baseline(const std::string& config_path, const std::optional<std::uint64_t>& seed_flag) {
    const ExperimentConfig cfg = load_config(config_path);
    const std::uint64_t master = resolve_master_seed(cfg, seed_flag);
    const PreparedData data = prepare_dataset(cfg, master);
    const fs::path out = ensure_output_dir(cfg);
    if (data.pca) write_json(out / "pca_model.json", pca_model_to_json(*data.pca));

    ClassicalBaseline net;
    TrainHistory history;
    RunRecord record;
    try {
        record = run_baseline(data.table, cfg.train, derive_run_seed(master, baseline_cell_index, 0),
                              cfg.n_q, &net, &history);
    } catch (const std::exception& e) {
        throw training_error(e.what());
    }
    write_json(out / "baseline.json", record_to_json(record));
    write_json(out / "baseline_checkpoint.json", checkpoint_to_json(net, cfg.train, history));
    std::cerr << "[baseline] val=" << record.val_accuracy << " test=" << record.test_accuracy << "\n";
    return 0;
}

int cmd_search(const std::string& config_path, const std::optional<std::uint64_t>& seed_flag,
               int jobs) {
    const ExperimentConfig cfg = load_config(config_path);
    if (cfg.cells.empty()) throw config_error("search: config has no cells");
    const std::uint64_t master = resolve_master_seed(cfg, seed_flag);
    const PreparedData data = prepare_dataset(cfg, master);
    const fs::path out = ensure_output_dir(cfg);
    if (data.pca) write_json(out / "pca_model.json", pca_model_to_json(*data.pca));

    SearchConfig search;
    search.n_q = cfg.n_q;
    search.cells = cfg.cells;
    search.master_seed = master;
    search.train = cfg.train;
    search.jobs = jobs;

    const std::vector<RunRecord> records =
        run_search(search, data.table, [](const RunRecord& r) {
            if (r.failed)
                std::cerr << "[search] " << r.run_id << " FAILED: " << r.error << "\n";
            else
                std::cerr << "[search] " << r.run_id << " val=" << r.val_accuracy
                          << " test=" << r.test_accuracy << " (" << r.wall_time << "s)\n";
        });
    save_records(records, out / "records.jsonl");

    const auto failed = std::count_if(records.begin(), records.end(),
                                      [](const RunRecord& r) { return r.failed; });
    if (failed > 0)
        throw training_error(std::to_string(failed) + " run(s) failed; records preserved in " +
                             (out / "records.jsonl").string());
    std::cerr << "[search] " << records.size() << " runs written to " << (out / "records.jsonl")
              << "\n";
    return 0;
}

int cmd_ensemble(const std::string& config_path, const std::optional<std::uint64_t>& seed_flag,
                 std::string records_path, std::vector<double> top_r) {
    const ExperimentConfig cfg = load_config(config_path);
    const std::uint64_t master = resolve_master_seed(cfg, seed_flag);
    const PreparedData data = prepare_dataset(cfg, master);
    const fs::path out = ensure_output_dir(cfg);
    if (records_path.empty()) records_path = (out / "records.jsonl").string();
    if (top_r.empty()) top_r = cfg.ensemble_top_r;
    for (double r : top_r)
        if (r <= 0.0 || r > 100.0)
            throw config_error("ensemble: r must be in (0, 100], got " + std::to_string(r));

    std::vector<RunRecord> records;
    try {
        records = load_records(records_path);
    } catch (const std::exception& e) {
        throw config_error(e.what());
    }

    std::vector<int> test_labels;
    for (std::size_t i : data.table.indices_of(Split::Test)) test_labels.push_back(data.table.labels[i]);

    // rank within each cell, as the protocol prescribes
    std::vector<std::string> cell_order;
    for (const RunRecord& r : records)
        if (!r.failed && std::find(cell_order.begin(), cell_order.end(), r.cell) == cell_order.end())
            cell_order.push_back(r.cell);
    if (cell_order.empty()) throw selection_error("ensemble: no usable records");

    std::vector<EnsembleEntry> entries;
    for (const std::string& cell : cell_order) {
        std::vector<RunRecord> members_pool;
        for (const RunRecord& r : records)
            if (!r.failed && r.cell == cell) members_pool.push_back(r);
        for (double r : top_r) {
            std::vector<RunRecord> selected;
            try {
                selected = top_r_select(members_pool, r);
            } catch (const std::exception& e) {
                throw selection_error(e.what());
            }
            std::vector<std::vector<std::vector<double>>> probs;
            std::vector<std::string> ids;
            for (const RunRecord& rec : selected) {
                if (rec.test_probabilities.size() != test_labels.size())
                    throw config_error("ensemble: record " + rec.run_id +
                                       " has stored probabilities for a different test split");
                probs.push_back(rec.test_probabilities);
                ids.push_back(rec.run_id);
            }
            EnsembleEntry entry;
            entry.cell = cell;
            entry.r = r;
            entry.result = ensemble_vote(probs, test_labels, std::move(ids));
            std::cerr << "[ensemble] " << cell << " top-" << r << "% acc="
                      << entry.result.test_accuracy << " (" << entry.result.member_run_ids.size()
                      << " members)\n";
            entries.push_back(std::move(entry));
        }
    }

    json doc = json::array();
    for (const EnsembleEntry& e : entries) doc.push_back(ensemble_entry_to_json(e));
    write_json(out / "ensembles.json", doc);
    return 0;
}

int cmd_report(const std::string& config_path, std::string records_path, std::string baseline_path,
               std::string ensembles_path) {
    const ExperimentConfig cfg = load_config(config_path);
    const fs::path out = ensure_output_dir(cfg);
    if (records_path.empty()) records_path = (out / "records.jsonl").string();
    if (baseline_path.empty()) {
        const fs::path p = out / "baseline.json";
        if (fs::exists(p)) baseline_path = p.string();
    }
    if (ensembles_path.empty()) {
        const fs::path p = out / "ensembles.json";
        if (fs::exists(p)) ensembles_path = p.string();
    }

    std::vector<RunRecord> records;
    std::optional<RunRecord> baseline;
    std::vector<EnsembleEntry> ensembles;
    try {
        records = load_records(records_path);
        if (!baseline_path.empty()) {
            std::ifstream in(baseline_path);
            if (!in) throw std::runtime_error("cannot open " + baseline_path);
            json j;
            in >> j;
            baseline = record_from_json(j);
        }
        if (!ensembles_path.empty()) {
            std::ifstream in(ensembles_path);
            if (!in) throw std::runtime_error("cannot open " + ensembles_path);
            json j;
            in >> j;
            for (const json& e : j) ensembles.push_back(ensemble_entry_from_json(e));
        }
    } catch (const std::exception& e) {
        throw config_error(e.what());
    }

    const Report report = build_report(records, baseline ? &*baseline : nullptr, ensembles);
    write_json(out / "report.json", report.document);
    write_text(out / "scatter.csv", report.scatter_csv);
    write_text(out / "topr.csv", report.topr_csv);
    std::cerr << "[report] written to " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic entanglement-configuration search for hybrid quantum-classical classifiers"};
    app.require_subcommand(1);

    SampleArgs sample_args;
    std::optional<int> opt_k, opt_e, opt_kmax;
    auto* sample_cmd = app.add_subcommand("sample", "Sample a stochastic entanglement configuration");
    sample_cmd->add_option("--n-q", sample_args.n_q, "Number of qubits")->capture_default_str();
    sample_cmd->add_option("--mode", sample_args.mode,
                           "Sampling mode: constrained, unconstrained, semi_constrained");
    sample_cmd->add_option("--k", opt_k, "Per-qubit entanglement count (constrained mode)");
    sample_cmd->add_option("--e", opt_e, "Total entanglement count (unconstrained mode)");
    sample_cmd->add_option("--k-max", opt_kmax, "Per-qubit upper bound (semi-constrained mode)");
    sample_cmd->add_option("--seed", sample_args.seed, "RNG seed")->capture_default_str();
    sample_cmd->add_option("--out", sample_args.out, "Output file prefix")->capture_default_str();

    std::string topo_kind;
    int topo_nq = 8;
    std::string topo_out = "beta";
    auto* topo_cmd = app.add_subcommand("topology", "Emit a conventional entanglement topology");
    topo_cmd->add_option("--kind", topo_kind, "ring, nearest, none, or full")->required();
    topo_cmd->add_option("--n-q", topo_nq, "Number of qubits")->capture_default_str();
    topo_cmd->add_option("--out", topo_out, "Output file prefix")->capture_default_str();

    std::string config_path, beta_path, run_id = "train";
    std::optional<std::uint64_t> seed_flag;
    std::string records_path, baseline_path, ensembles_path;
    std::vector<double> top_r;
    int jobs = 0;

    auto* train_cmd = app.add_subcommand("train", "Train one dressed configuration");
    train_cmd->add_option("--config", config_path, "Experiment config JSON")->required();
    train_cmd->add_option("--beta", beta_path, "Configuration descriptor (.json) or matrix (.csv)")
        ->required();
    train_cmd->add_option("--run-id", run_id, "Record identifier")->capture_default_str();
    train_cmd->add_option("--master-seed", seed_flag, "Master seed override");

    auto* baseline_cmd = app.add_subcommand("baseline", "Train the classical baseline");
    baseline_cmd->add_option("--config", config_path, "Experiment config JSON")->required();
    baseline_cmd->add_option("--master-seed", seed_flag, "Master seed override");

    auto* search_cmd = app.add_subcommand("search", "Run the configured search cells");
    search_cmd->add_option("--config", config_path, "Experiment config JSON")->required();
    search_cmd->add_option("--master-seed", seed_flag, "Master seed override");
    search_cmd->add_option("--jobs", jobs, "Concurrent runs (default: hardware parallelism)");

    auto* ensemble_cmd = app.add_subcommand("ensemble", "Majority-vote top-r% per cell");
    ensemble_cmd->add_option("--config", config_path, "Experiment config JSON")->required();
    ensemble_cmd->add_option("--master-seed", seed_flag, "Master seed override");
    ensemble_cmd->add_option("--records", records_path, "Records JSON-lines file");
    ensemble_cmd->add_option("--r", top_r, "Top-r percentages (repeatable)");

    auto* report_cmd = app.add_subcommand("report", "Summarize records into report files");
    report_cmd->add_option("--config", config_path, "Experiment config JSON")->required();
    report_cmd->add_option("--records", records_path, "Records JSON-lines file");
    report_cmd->add_option("--baseline", baseline_path, "Baseline record JSON");
    report_cmd->add_option("--ensembles", ensembles_path, "Ensembles JSON");

    CLI11_PARSE(app, argc, argv);

    sample_args.k = opt_k;
    sample_args.e = opt_e;
    sample_args.k_max = opt_kmax;

    try {
        if (sample_cmd->parsed()) return cmd_sample(sample_args);
        if (topo_cmd->parsed()) return cmd_topology(topo_kind, topo_nq, topo_out);
        if (train_cmd->parsed()) return cmd_train(config_path, beta_path, seed_flag, run_id);
        if (baseline_cmd->parsed()) return cmd_baseline(config_path, seed_flag);
        if (search_cmd->parsed()) return cmd_search(config_path, seed_flag, jobs);
        if (ensemble_cmd->parsed()) return cmd_ensemble(config_path, seed_flag, records_path, top_r);
        if (report_cmd->parsed()) return cmd_report(config_path, records_path, baseline_path,
                                                    ensembles_path);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
