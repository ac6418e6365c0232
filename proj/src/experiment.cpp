#include "entsearch/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace entsearch {

nlohmann::json record_to_json(const RunRecord& record) {
    nlohmann::json j;
    j["run_id"] = record.run_id;
    j["cell"] = record.cell;
    j["mode"] = record.mode;
    j["seed"] = record.seed;
    j["failed"] = record.failed;
    if (record.failed) {
        j["error"] = record.error;
        return j;
    }
    if (record.beta) j["beta"] = descriptor_to_json(*record.beta);
    if (record.mu) j["mu"] = *record.mu;
    if (record.per_qubit) j["k"] = *record.per_qubit;
    if (record.total) j["E"] = *record.total;
    if (record.per_qubit_max) j["k_max"] = *record.per_qubit_max;
    j["val_accuracy"] = record.val_accuracy;
    j["test_accuracy"] = record.test_accuracy;
    j["best_epoch"] = record.best_epoch;
    if (!record.theta_history.empty()) j["theta_history"] = record.theta_history;
    if (!record.test_probabilities.empty()) j["test_probabilities"] = record.test_probabilities;
    j["wall_time"] = record.wall_time;
    return j;
}

RunRecord record_from_json(const nlohmann::json& j) {
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.cell = j.value("cell", std::string{});
    r.mode = j.at("mode").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.failed = j.value("failed", false);
    if (r.failed) {
        r.error = j.value("error", std::string{});
        return r;
    }
    if (j.contains("beta")) r.beta = descriptor_from_json(j["beta"]);
    if (j.contains("mu")) r.mu = j["mu"].get<double>();
    if (j.contains("k")) r.per_qubit = j["k"].get<int>();
    if (j.contains("E")) r.total = j["E"].get<int>();
    if (j.contains("k_max")) r.per_qubit_max = j["k_max"].get<int>();
    r.val_accuracy = j.at("val_accuracy").get<double>();
    r.test_accuracy = j.at("test_accuracy").get<double>();
    r.best_epoch = j.at("best_epoch").get<int>();
    if (j.contains("theta_history"))
        r.theta_history = j["theta_history"].get<std::vector<std::vector<double>>>();
    if (j.contains("test_probabilities"))
        r.test_probabilities = j["test_probabilities"].get<std::vector<std::vector<double>>>();
    r.wall_time = j.value("wall_time", 0.0);
    return r;
}

void save_records(const std::vector<RunRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_records: cannot open " + path.string());
    for (const RunRecord& r : records) out << record_to_json(r).dump() << '\n';
}

std::vector<RunRecord> load_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_records: cannot open " + path.string());
    std::vector<RunRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(record_from_json(nlohmann::json::parse(line)));
    }
    return records;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_run_seed(std::uint64_t master_seed, std::uint64_t cell_index,
                              std::uint64_t run_index) {
    std::uint64_t s = splitmix64(master_seed);
    s = splitmix64(s ^ splitmix64(cell_index + 1));
    s = splitmix64(s ^ splitmix64(run_index + 1));
    return s;
}

std::string cell_label(const SamplingSpec& spec) {
    switch (spec.mode) {
        case SamplingSpec::Mode::Unconstrained:
            return "unconstrained-E" + std::to_string(spec.total);
        case SamplingSpec::Mode::Constrained:
            return "constrained-k" + std::to_string(spec.per_qubit);
        case SamplingSpec::Mode::SemiConstrained:
            return "semi-kmax" + std::to_string(spec.per_qubit_max);
    }
    return "unknown";
}

RunRecord run_single(const ConfigurationDescriptor& config, std::uint64_t seed,
                     const FeatureTable& data, const TrainConfig& train_cfg, bool capture_theta,
                     const std::string& run_id, const std::string& cell, DressedNet* model_out,
                     TrainHistory* history_out) {
    const auto start = std::chrono::steady_clock::now();

    RunRecord record;
    record.run_id = run_id;
    record.cell = cell;
    record.mode = config.mode;
    record.seed = seed;
    record.beta = config;
    record.mu = density(config.matrix);
    record.per_qubit = config.per_qubit;
    record.total = config.total;
    record.per_qubit_max = config.per_qubit_max;

    DressedNet net = make_dressed_net(data.dimension(), config.matrix, data.num_classes());
    TrainConfig cfg = train_cfg;
    cfg.seed = seed;
    const TrainHistory history = train(net, data, cfg);

    record.val_accuracy = history.best_val_accuracy;
    record.best_epoch = history.best_epoch;
    record.test_accuracy = evaluate(net, data, Split::Test);
    if (capture_theta) {
        record.theta_history.reserve(history.epochs.size());
        for (const EpochStats& e : history.epochs) record.theta_history.push_back(e.theta);
    }
    for (std::size_t i : data.indices_of(Split::Test))
        record.test_probabilities.push_back(dressed_forward(net, data.rows[i]).probs);

    record.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (history_out) *history_out = history;
    if (model_out) *model_out = std::move(net);
    return record;
}

RunRecord run_baseline(const FeatureTable& data, const TrainConfig& train_cfg, std::uint64_t seed,
                       int n_q, ClassicalBaseline* model_out, TrainHistory* history_out) {
    const auto start = std::chrono::steady_clock::now();

    RunRecord record;
    record.run_id = "baseline";
    record.mode = "baseline";
    record.seed = seed;

    ClassicalBaseline net = make_baseline(data.dimension(), n_q, data.num_classes());
    TrainConfig cfg = train_cfg;
    cfg.seed = seed;
    const TrainHistory history = train(net, data, cfg);

    record.val_accuracy = history.best_val_accuracy;
    record.best_epoch = history.best_epoch;
    record.test_accuracy = evaluate(net, data, Split::Test);
    for (std::size_t i : data.indices_of(Split::Test))
        record.test_probabilities.push_back(baseline_forward(net, data.rows[i]).probs);

    record.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (history_out) *history_out = history;
    if (model_out) *model_out = std::move(net);
    return record;
}

std::vector<RunRecord> run_search(const SearchConfig& cfg, const FeatureTable& data,
                                  const std::function<void(const RunRecord&)>& on_complete) {
    if (cfg.cells.empty()) throw std::invalid_argument("run_search: no cells configured");
    for (const SearchCell& cell : cfg.cells) {
        cell.spec.check();
        if (cell.spec.n_q != cfg.n_q)
            throw std::invalid_argument("run_search: cell qubit count differs from config");
        if (cell.n_runs < 1) throw std::invalid_argument("run_search: n_runs must be >= 1");
    }
    const bool capture_theta = cfg.capture_theta.value_or(cfg.n_q <= 8);

    struct Job {
        std::size_t cell_index;
        int run_index;
        std::size_t slot;
    };
    std::vector<Job> jobs;
    std::size_t slot = 0;
    for (std::size_t ci = 0; ci < cfg.cells.size(); ++ci)
        for (int ri = 0; ri < cfg.cells[ci].n_runs; ++ri) jobs.push_back({ci, ri, slot++});

    std::vector<RunRecord> records(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex notify_mutex;

    auto worker = [&]() {
        while (true) {
            const std::size_t at = next.fetch_add(1);
            if (at >= jobs.size()) return;
            const Job& job = jobs[at];
            const SearchCell& cell = cfg.cells[job.cell_index];
            const std::string label = cell_label(cell.spec);
            const std::uint64_t seed = derive_run_seed(cfg.master_seed, job.cell_index, job.run_index);
            char run_id[64];
            std::snprintf(run_id, sizeof(run_id), "cell%02zu-run%03d", job.cell_index, job.run_index);

            RunRecord record;
            try {
                std::mt19937_64 rng(seed);
                const EntanglementMatrix beta = sample(cell.spec, rng);
                const ConfigurationDescriptor desc = describe(beta, cell.spec, seed);
                record = run_single(desc, seed, data, cfg.train, capture_theta, run_id, label);
            } catch (const std::exception& e) {
                record = RunRecord{};
                record.run_id = run_id;
                record.cell = label;
                record.mode = mode_name(cell.spec.mode);
                record.seed = seed;
                record.failed = true;
                record.error = e.what();
            }
            if (on_complete) {
                std::lock_guard<std::mutex> lock(notify_mutex);
                on_complete(record);
            }
            records[job.slot] = std::move(record);
        }
    };

    int n_workers = cfg.jobs > 0 ? cfg.jobs : static_cast<int>(std::thread::hardware_concurrency());
    n_workers = std::max(1, std::min<int>(n_workers, static_cast<int>(jobs.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    return records;
}

std::vector<RunRecord> constructive_subspace(const std::vector<RunRecord>& records,
                                             const RunRecord& baseline, bool by_validation) {
    const double bar = by_validation ? baseline.val_accuracy : baseline.test_accuracy;
    std::vector<RunRecord> out;
    for (const RunRecord& r : records) {
        if (r.failed) continue;
        const double value = by_validation ? r.val_accuracy : r.test_accuracy;
        if (value > bar) out.push_back(r);
    }
    return out;
}

std::vector<RunRecord> top_r_select(const std::vector<RunRecord>& records, double r) {
    if (r <= 0.0 || r > 100.0) throw std::invalid_argument("top_r_select: r must be in (0, 100]");
    std::vector<RunRecord> usable;
    for (const RunRecord& rec : records)
        if (!rec.failed) usable.push_back(rec);
    if (usable.empty()) throw std::invalid_argument("top_r_select: no usable records");

    std::sort(usable.begin(), usable.end(), [](const RunRecord& a, const RunRecord& b) {
        if (a.val_accuracy != b.val_accuracy) return a.val_accuracy > b.val_accuracy;
        return a.run_id < b.run_id;
    });
    const std::size_t n = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(r * static_cast<double>(usable.size()) / 100.0)));
    usable.resize(n);
    return usable;
}

EnsembleResult ensemble_vote(const std::vector<std::vector<std::vector<double>>>& member_probs,
                             const std::vector<int>& labels,
                             std::vector<std::string> member_run_ids) {
    if (member_probs.empty()) throw std::invalid_argument("ensemble_vote: no members");
    const std::size_t n_samples = labels.size();
    for (const auto& member : member_probs)
        if (member.size() != n_samples)
            throw std::invalid_argument("ensemble_vote: member sample count mismatch");

    EnsembleResult result;
    result.member_run_ids = std::move(member_run_ids);
    result.aggregated_probs.resize(n_samples);
    std::size_t correct = 0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        const std::size_t n_out = member_probs.front()[s].size();
        std::vector<double> sum(n_out, 0.0);
        for (const auto& member : member_probs) {
            if (member[s].size() != n_out)
                throw std::invalid_argument("ensemble_vote: class count mismatch");
            for (std::size_t c = 0; c < n_out; ++c) sum[c] += member[s][c];
        }
        int best = 0;
        for (int c = 1; c < static_cast<int>(n_out); ++c)
            if (sum[c] > sum[best]) best = c;
        if (best == labels[s]) ++correct;
        for (double& v : sum) v /= static_cast<double>(member_probs.size());
        result.aggregated_probs[s] = std::move(sum);
    }
    result.test_accuracy = n_samples == 0 ? 0.0 : static_cast<double>(correct) / n_samples;
    return result;
}

nlohmann::json ensemble_entry_to_json(const EnsembleEntry& entry) {
    return {{"cell", entry.cell},
            {"r", entry.r},
            {"members", entry.result.member_run_ids},
            {"test_accuracy", entry.result.test_accuracy},
            {"aggregated_probs", entry.result.aggregated_probs}};
}

EnsembleEntry ensemble_entry_from_json(const nlohmann::json& j) {
    EnsembleEntry entry;
    entry.cell = j.at("cell").get<std::string>();
    entry.r = j.at("r").get<double>();
    entry.result.member_run_ids = j.at("members").get<std::vector<std::string>>();
    entry.result.test_accuracy = j.at("test_accuracy").get<double>();
    if (j.contains("aggregated_probs"))
        entry.result.aggregated_probs = j["aggregated_probs"].get<std::vector<std::vector<double>>>();
    return entry;
}

namespace {

std::string format_double(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

Report build_report(const std::vector<RunRecord>& records, const RunRecord* baseline,
                    const std::vector<EnsembleEntry>& ensembles) {
    // group by cell, preserving first-appearance order
    std::vector<std::string> cell_order;
    for (const RunRecord& r : records) {
        const std::string key = r.cell.empty() ? r.mode : r.cell;
        if (std::find(cell_order.begin(), cell_order.end(), key) == cell_order.end())
            cell_order.push_back(key);
    }

    nlohmann::json cells = nlohmann::json::array();
    std::string scatter = "cell,mode,mu,k,test_acc\n";
    for (const std::string& key : cell_order) {
        std::vector<const RunRecord*> members;
        int n_failed = 0;
        for (const RunRecord& r : records) {
            if ((r.cell.empty() ? r.mode : r.cell) != key) continue;
            if (r.failed) {
                ++n_failed;
                continue;
            }
            members.push_back(&r);
            scatter += key + ',' + r.mode + ',' + (r.mu ? format_double(*r.mu) : "") + ',' +
                       (r.per_qubit ? std::to_string(*r.per_qubit) : "") + ',' +
                       format_double(r.test_accuracy) + '\n';
        }

        nlohmann::json cell;
        cell["cell"] = key;
        cell["n_runs"] = static_cast<int>(members.size()) + n_failed;
        cell["n_failed"] = n_failed;
        if (!members.empty()) {
            const RunRecord& first = *members.front();
            cell["mode"] = first.mode;
            if (first.per_qubit) cell["k"] = *first.per_qubit;
            if (first.total) cell["E"] = *first.total;
            if (first.per_qubit_max) cell["k_max"] = *first.per_qubit_max;
            const bool fixed_mu = first.mu && std::all_of(members.begin(), members.end(),
                                                          [&](const RunRecord* r) {
                                                              return r->mu && *r->mu == *first.mu;
                                                          });
            if (fixed_mu) cell["mu"] = *first.mu;
            std::vector<double> test_accs, val_accs;
            for (const RunRecord* r : members) {
                test_accs.push_back(r->test_accuracy);
                val_accs.push_back(r->val_accuracy);
            }
            cell["best_test_accuracy"] = *std::max_element(test_accs.begin(), test_accs.end());
            cell["median_test_accuracy"] = median(test_accs);
            cell["best_val_accuracy"] = *std::max_element(val_accs.begin(), val_accs.end());
        }
        cells.push_back(std::move(cell));
    }

    Report report;
    report.document["version"] = 1;
    report.document["cells"] = std::move(cells);

    if (baseline) {
        report.document["baseline"] = {{"test_accuracy", baseline->test_accuracy},
                                       {"val_accuracy", baseline->val_accuracy}};
        const std::vector<RunRecord> constructive = constructive_subspace(records, *baseline);
        std::size_t usable = 0;
        for (const RunRecord& r : records)
            if (!r.failed) ++usable;
        nlohmann::json ids = nlohmann::json::array();
        for (const RunRecord& r : constructive) ids.push_back(r.run_id);
        report.document["constructive"] = {
            {"count", constructive.size()},
            {"fraction", usable == 0 ? 0.0 : static_cast<double>(constructive.size()) / usable},
            {"run_ids", std::move(ids)}};
    }

    report.topr_csv = "cell,r,ensemble_acc\n";
    if (!ensembles.empty()) {
        nlohmann::json ens = nlohmann::json::array();
        for (const EnsembleEntry& e : ensembles) {
            ens.push_back({{"cell", e.cell},
                           {"r", e.r},
                           {"members", e.result.member_run_ids},
                           {"test_accuracy", e.result.test_accuracy}});
            report.topr_csv += e.cell + ',' + format_double(e.r) + ',' +
                               format_double(e.result.test_accuracy) + '\n';
        }
        report.document["ensembles"] = std::move(ens);
    }

    report.scatter_csv = std::move(scatter);
    return report;
}

}  // namespace entsearch
