#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "entsearch/nnet.hpp"

using namespace entsearch;

namespace {

FeatureTable toy_clusters(double separation, std::uint64_t seed, int per_class = 60) {
    SyntheticSpec spec;
    spec.samples_per_class = per_class;
    spec.dimension = 20;
    spec.separation = separation;
    spec.patients_per_class = 6;
    spec.seed = seed;
    FeatureTable table = synthesize_dataset(spec);
    patient_split(table, {0.5, 0.25, 0.25}, seed);
    return table;
}

template <typename Model>
std::vector<double> fd_loss_gradient(Model& net, const std::vector<double>& x, int label,
                                     Prediction (*fwd)(const Model&, const std::vector<double>&),
                                     double h = 1e-5) {
    const std::vector<double> base = parameters(net);
    std::vector<double> grad(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        std::vector<double> p = base;
        p[i] = base[i] + h;
        set_parameters(net, p);
        const double up = cross_entropy(fwd(net, x).probs, label);
        p[i] = base[i] - h;
        set_parameters(net, p);
        const double down = cross_entropy(fwd(net, x).probs, label);
        grad[i] = (up - down) / (2.0 * h);
    }
    set_parameters(net, base);
    return grad;
}

}  // namespace

TEST_CASE("dense_forward") {
    DenseLayer identity_tanh(2, 2, Activation::Tanh);
    identity_tanh.weights = {1, 0, 0, 1};
    const auto y = dense_forward(identity_tanh, {0.5, -0.5});
    CHECK(y[0] == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(std::tanh(-0.5)).epsilon(1e-15));

    DenseLayer biased(3, 2, Activation::Tanh);
    biased.bias = {0.3, -0.7};
    const auto at_zero = dense_forward(biased, {0, 0, 0});
    CHECK(at_zero[0] == doctest::Approx(std::tanh(0.3)).epsilon(1e-15));
    CHECK(at_zero[1] == doctest::Approx(std::tanh(-0.7)).epsilon(1e-15));

    DenseLayer affine(2, 2, Activation::Identity);
    affine.weights = {1, 2, 3, 4};
    affine.bias = {1, -1};
    CHECK(dense_forward(affine, {1, 1}) == std::vector<double>{4, 6});

    CHECK_THROWS_AS(dense_forward(affine, {1, 1, 1}), std::invalid_argument);
}

TEST_CASE("softmax") {
    CHECK(softmax({0, 0}) == std::vector<double>{0.5, 0.5});
    const auto p = softmax({std::log(2.0), 0.0});
    CHECK(p[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(softmax({1000, 1000}) == std::vector<double>{0.5, 0.5});  // no overflow

    const auto q = softmax({1.3, -0.2, 0.9});
    double sum = 0.0;
    for (double v : q) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-12);
    // invariant under a constant logit shift
    const auto shifted = softmax({1.3 + 5.0, -0.2 + 5.0, 0.9 + 5.0});
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs(q[i] - shifted[i]) < 1e-12);
}

TEST_CASE("cross_entropy") {
    CHECK(cross_entropy({1.0, 0.0}, 0) == 0.0);
    CHECK(cross_entropy({0.5, 0.5}, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(cross_entropy({1.0, 0.0}, 1) == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
    CHECK_THROWS_AS(cross_entropy({0.5, 0.5}, 2), std::out_of_range);
}

TEST_CASE("cross-entropy logit gradient is probs minus onehot") {
    const std::vector<double> logits{0.8, -0.3, 0.1};
    const int label = 1;
    const std::vector<double> probs = softmax(logits);
    const double h = 1e-6;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        std::vector<double> up = logits, down = logits;
        up[i] += h;
        down[i] -= h;
        const double fd =
            (cross_entropy(softmax(up), label) - cross_entropy(softmax(down), label)) / (2 * h);
        const double analytic = probs[i] - (static_cast<int>(i) == label ? 1.0 : 0.0);
        CHECK(std::abs(fd - analytic) < 1e-8);
    }
}

TEST_CASE("dressed_forward structure") {
    DressedNet net = make_dressed_net(3, EntanglementMatrix(2), 2);
    // zero output layer: logits are the output bias
    const Prediction p = dressed_forward(net, {0.4, -0.2, 1.0});
    CHECK(p.logits == std::vector<double>{0, 0});
    CHECK(p.probs == std::vector<double>{0.5, 0.5});

    net.output.bias = {0.7, -0.1};
    CHECK(dressed_forward(net, {0.4, -0.2, 1.0}).logits == std::vector<double>{0.7, -0.1});
}

TEST_CASE("dressed_forward single-qubit reduction") {
    DressedNet net = make_dressed_net(1, EntanglementMatrix(1), 2);
    net.input.weights = {1.0};  // f = tanh(x)
    net.theta = {0.0};
    net.output.weights = {1.0, 0.0};
    for (const double x : {-1.2, 0.0, 0.4, 2.5}) {
        const double z = -std::sin(std::tanh(x));  // single-qubit closed form at theta = 0
        const Prediction p = dressed_forward(net, {x});
        CHECK(std::abs(p.logits[0] - z) < 1e-12);
        CHECK(p.logits[1] == 0.0);
    }
}

TEST_CASE("perturbing an input weight moves the probabilities") {
    std::mt19937_64 rng(19);
    DressedNet net = make_dressed_net(4, conventional(TopologyKind::Ring, 3), 2);
    initialize(net, rng);
    const std::vector<double> x{0.3, -0.6, 1.1, 0.2};
    const double before = dressed_forward(net, x).probs[0];
    net.input.weights[1] += 1e-3;
    CHECK(dressed_forward(net, x).probs[0] != before);
}

TEST_CASE("baseline_forward") {
    ClassicalBaseline zeros = make_baseline(3, 4, 2);
    CHECK(baseline_forward(zeros, {1.0, 2.0, 3.0}).probs == std::vector<double>{0.5, 0.5});

    std::mt19937_64 rng(29);
    ClassicalBaseline net = make_baseline(5, 4, 3);
    initialize(net, rng);
    std::normal_distribution<double> gauss;
    std::vector<double> x(5);
    for (double& v : x) v = gauss(rng);
    const Prediction p = baseline_forward(net, x);
    double sum = 0.0;
    for (double v : p.probs) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("end-to-end gradients match finite differences") {
    std::mt19937_64 rng(37);
    const EntanglementMatrix beta = sample(SamplingSpec::constrained(4, 2), rng);
    DressedNet net = make_dressed_net(6, beta, 2);
    initialize(net, rng);
    std::normal_distribution<double> gauss;
    std::vector<double> x(6);
    for (double& v : x) v = gauss(rng);

    const std::vector<double> analytic = loss_gradient(net, x, 1);
    const std::vector<double> fd = fd_loss_gradient(net, x, 1, &dressed_forward);
    REQUIRE(analytic.size() == fd.size());
    for (std::size_t i = 0; i < fd.size(); ++i)
        CHECK(std::abs(analytic[i] - fd[i]) <= 1e-4 * std::max(1.0, std::abs(fd[i])));

    ClassicalBaseline base = make_baseline(6, 4, 2);
    initialize(base, rng);
    const std::vector<double> ba = loss_gradient(base, x, 0);
    const std::vector<double> bf = fd_loss_gradient(base, x, 0, &baseline_forward);
    for (std::size_t i = 0; i < bf.size(); ++i)
        CHECK(std::abs(ba[i] - bf[i]) <= 1e-6 * std::max(1.0, std::abs(bf[i])));
}

TEST_CASE("baseline reaches full train accuracy on separable clusters") {
    const FeatureTable data = toy_clusters(10.0, 5);
    ClassicalBaseline net = make_baseline(20, 8, 2);
    TrainConfig cfg;
    cfg.seed = 5;
    const TrainHistory history = train(net, data, cfg);
    CHECK(history.epochs.back().train_accuracy == 1.0);
    // the returned model carries best-validation weights, not final-epoch ones
    CHECK(evaluate(net, data, Split::Validation) == history.best_val_accuracy);
    CHECK(evaluate(net, data, Split::Test) > 0.9);
}

TEST_CASE("dressed model trains on separable clusters") {
    const FeatureTable data = toy_clusters(10.0, 5);
    std::mt19937_64 rng(5);
    DressedNet net = make_dressed_net(20, sample(SamplingSpec::constrained(8, 2), rng), 2);
    TrainConfig cfg;
    cfg.seed = 5;
    const TrainHistory history = train(net, data, cfg);
    CHECK(history.epochs.back().train_accuracy >= 0.95);
}

TEST_CASE("training is deterministic per seed") {
    const FeatureTable data = toy_clusters(3.0, 11, 24);
    TrainConfig cfg;
    cfg.seed = 9;
    cfg.epochs = 8;

    ClassicalBaseline a = make_baseline(20, 8, 2);
    ClassicalBaseline b = make_baseline(20, 8, 2);
    const TrainHistory ha = train(a, data, cfg);
    const TrainHistory hb = train(b, data, cfg);
    CHECK(parameters(a) == parameters(b));  // bit-identical
    REQUIRE(ha.epochs.size() == hb.epochs.size());
    for (std::size_t e = 0; e < ha.epochs.size(); ++e) {
        CHECK(ha.epochs[e].train_accuracy == hb.epochs[e].train_accuracy);
        CHECK(ha.epochs[e].val_accuracy == hb.epochs[e].val_accuracy);
    }

    cfg.seed = 10;
    ClassicalBaseline c = make_baseline(20, 8, 2);
    train(c, data, cfg);
    CHECK(parameters(a) != parameters(c));
}

TEST_CASE("learning-rate staircase and theta history") {
    const FeatureTable data = toy_clusters(3.0, 13, 16);
    std::mt19937_64 rng(13);
    DressedNet net = make_dressed_net(20, sample(SamplingSpec::constrained(8, 1), rng), 2);
    TrainConfig cfg;
    cfg.seed = 13;
    cfg.epochs = 25;
    cfg.decay_every = 10;
    const TrainHistory history = train(net, data, cfg);

    REQUIRE(static_cast<int>(history.epochs.size()) == cfg.epochs);
    for (int e = 1; e <= cfg.epochs; ++e) {
        const double expected = cfg.learning_rate * std::pow(cfg.decay_gamma, e / cfg.decay_every);
        CHECK(history.epochs[e - 1].learning_rate == expected);
        CHECK(history.epochs[e - 1].theta.size() == 8);
    }
}

TEST_CASE("best-epoch selection restores the best validation weights") {
    const FeatureTable data = toy_clusters(2.0, 17, 24);
    ClassicalBaseline net = make_baseline(20, 8, 2);
    TrainConfig cfg;
    cfg.seed = 17;
    cfg.epochs = 12;
    const TrainHistory history = train(net, data, cfg);

    REQUIRE(history.best_epoch >= 1);
    REQUIRE(history.best_epoch <= cfg.epochs);
    double best = 0.0;
    int first_best = 0;
    for (int e = 1; e <= cfg.epochs; ++e) {
        if (history.epochs[e - 1].val_accuracy > best) {
            best = history.epochs[e - 1].val_accuracy;
            first_best = e;
        }
    }
    CHECK(history.best_epoch == first_best);
    CHECK(history.best_val_accuracy == best);
    CHECK(evaluate(net, data, Split::Validation) == best);
}

TEST_CASE("train rejects empty splits and bad configs") {
    FeatureTable data = toy_clusters(2.0, 19, 16);
    for (auto& s : data.splits)
        if (s == Split::Validation) s = Split::Test;
    ClassicalBaseline net = make_baseline(20, 8, 2);
    TrainConfig cfg;
    CHECK_THROWS_AS(train(net, data, cfg), std::invalid_argument);

    TrainConfig bad;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.check(), std::invalid_argument);
    bad = TrainConfig{};
    bad.decay_gamma = 1.5;
    CHECK_THROWS_AS(bad.check(), std::invalid_argument);
}

TEST_CASE("evaluate") {
    // uniform predictor: ties break to class 0, so accuracy = fraction of label 0
    FeatureTable data;
    for (int i = 0; i < 10; ++i) {
        data.rows.push_back({0.0, 0.0});
        data.labels.push_back(i < 3 ? 0 : 1);
        data.patient_ids.push_back("p" + std::to_string(i));
        data.splits.push_back(Split::Test);
    }
    const ClassicalBaseline uniform = make_baseline(2, 2, 2);
    CHECK(evaluate(uniform, data, Split::Test) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK_THROWS_AS(evaluate(uniform, data, Split::Train), std::invalid_argument);

    // hand-built diagonal net: prediction is argmax(x1, x2)
    ClassicalBaseline argmax_net = make_baseline(2, 2, 2);
    argmax_net.input.weights = {2, 0, 0, 2};
    argmax_net.output.weights = {1, 0, 0, 1};
    FeatureTable four;
    four.rows = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 1.0}, {0.5, 0.2}};
    four.labels = {0, 0, 1, 1};
    four.patient_ids = {"a", "b", "c", "d"};
    four.splits = std::vector<Split>(4, Split::Test);
    CHECK(evaluate(argmax_net, four, Split::Test) == 0.5);  // hand-counted: samples 1 and 3
}

TEST_CASE("checkpoint round-trip") {
    const FeatureTable data = toy_clusters(3.0, 23, 16);
    std::mt19937_64 rng(23);
    const SamplingSpec spec = SamplingSpec::constrained(8, 2);
    const EntanglementMatrix beta = sample(spec, rng);
    DressedNet net = make_dressed_net(20, beta, 2);
    TrainConfig cfg;
    cfg.seed = 23;
    cfg.epochs = 3;
    const TrainHistory history = train(net, data, cfg);

    const nlohmann::json j = checkpoint_to_json(net, describe(beta, spec, 23), cfg, history);
    const nlohmann::json reparsed = nlohmann::json::parse(j.dump());
    const DressedNet back = dressed_from_checkpoint(reparsed);
    const std::vector<double> p0 = parameters(net), p1 = parameters(back);
    REQUIRE(p0.size() == p1.size());
    for (std::size_t i = 0; i < p0.size(); ++i) CHECK(std::abs(p0[i] - p1[i]) <= 1e-15);
    CHECK(evaluate(back, data, Split::Test) == evaluate(net, data, Split::Test));
    CHECK(reparsed.at("history").at("best_epoch").get<int>() == history.best_epoch);

    ClassicalBaseline base = make_baseline(20, 8, 2);
    train(base, data, cfg);
    const ClassicalBaseline base_back =
        baseline_from_checkpoint(nlohmann::json::parse(checkpoint_to_json(base, cfg, history).dump()));
    CHECK(parameters(base_back) == parameters(base));
    CHECK_THROWS_AS(dressed_from_checkpoint(checkpoint_to_json(base, cfg, history)),
                    std::invalid_argument);
}
