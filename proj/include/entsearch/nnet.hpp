#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "json.hpp"

#include "entsearch/entanglement.hpp"
#include "entsearch/features.hpp"
#include "entsearch/vqc.hpp"

namespace entsearch {

enum class Activation { Tanh, Identity };

/// Fully connected layer y = phi(Wx + b); weights are row-major n_out x n_in.
struct DenseLayer {
    int n_in = 0;
    int n_out = 0;
    std::vector<double> weights;
    std::vector<double> bias;
    Activation activation = Activation::Identity;

    DenseLayer() = default;
    DenseLayer(int n_in, int n_out, Activation activation);
};

std::vector<double> dense_forward(const DenseLayer& layer, const std::vector<double>& x);

struct Prediction {
    std::vector<double> logits;
    std::vector<double> probs;
};

/// Numerically stable softmax (max-subtracted exponentials).
std::vector<double> softmax(const std::vector<double>& logits);

/// -ln(probs[label]) with the probability floored at 1e-12.
double cross_entropy(const std::vector<double>& probs, int label);

/// Hybrid classifier: tanh dense layer feeding encoding angles into the
/// circuit, trainable per-qubit RY angles, identity dense layer over the
/// Pauli-Z readouts.
struct DressedNet {
    DenseLayer input;           // n_in -> n_q, tanh
    std::vector<double> theta;  // n_q trainable circuit angles
    CircuitSpec circuit;
    DenseLayer output;          // n_q -> n_out, identity
};

/// The same architecture with the circuit removed: two dense layers.
struct ClassicalBaseline {
    DenseLayer input;   // n_in -> n_q, tanh
    DenseLayer output;  // n_q -> n_out, identity
};

DressedNet make_dressed_net(int n_in, EntanglementMatrix beta, int n_out);
ClassicalBaseline make_baseline(int n_in, int n_q, int n_out);

/// Glorot-uniform weights, zero biases; theta ~ N(0, 0.1) for dressed nets.
/// Draw order is fixed: input weights row-major, theta, output weights.
void initialize(DressedNet& net, std::mt19937_64& rng);
void initialize(ClassicalBaseline& net, std::mt19937_64& rng);

Prediction dressed_forward(const DressedNet& net, const std::vector<double>& x);
Prediction baseline_forward(const ClassicalBaseline& net, const std::vector<double>& x);

struct TrainConfig {
    int epochs = 70;
    double learning_rate = 0.00043;
    double decay_gamma = 0.6;
    int decay_every = 10;
    int batch_size = 8;
    std::uint64_t seed = 0;

    void check() const;
};

struct EpochStats {
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    double learning_rate = 0.0;
    std::vector<double> theta;  // snapshot, dressed models only
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = 0;  // 1-based epoch whose weights the model carries
    double best_val_accuracy = 0.0;
};

/// Minibatch Adam over cross-entropy. Initialization and shuffling are fully
/// determined by cfg.seed; the effective learning rate for 1-based epoch e
/// is lr * gamma^floor(e / decay_every). The model is left holding the
/// weights of the best-validation-accuracy epoch (ties resolve to the
/// earliest). The last partial minibatch is trained on.
TrainHistory train(DressedNet& net, const FeatureTable& data, const TrainConfig& cfg);
TrainHistory train(ClassicalBaseline& net, const FeatureTable& data, const TrainConfig& cfg);

/// Fraction of rows in the split whose argmax(probs) equals the label;
/// argmax ties break toward the lower class index.
double evaluate(const DressedNet& net, const FeatureTable& data, Split split);
double evaluate(const ClassicalBaseline& net, const FeatureTable& data, Split split);

/// Flat parameter vector in the optimizer's order: input weights row-major,
/// input bias, theta (dressed only), output weights, output bias.
std::vector<double> parameters(const DressedNet& net);
std::vector<double> parameters(const ClassicalBaseline& net);
void set_parameters(DressedNet& net, const std::vector<double>& values);
void set_parameters(ClassicalBaseline& net, const std::vector<double>& values);

/// Gradient of cross_entropy over one sample with respect to the flat
/// parameter vector; chain rule through the output layer, parameter-shift
/// through the circuit, chain rule through the input layer.
std::vector<double> loss_gradient(const DressedNet& net, const std::vector<double>& x, int label);
std::vector<double> loss_gradient(const ClassicalBaseline& net, const std::vector<double>& x,
                                  int label);

nlohmann::json checkpoint_to_json(const DressedNet& net, const ConfigurationDescriptor& beta,
                                  const TrainConfig& cfg, const TrainHistory& history);
nlohmann::json checkpoint_to_json(const ClassicalBaseline& net, const TrainConfig& cfg,
                                  const TrainHistory& history);
DressedNet dressed_from_checkpoint(const nlohmann::json& j);
ClassicalBaseline baseline_from_checkpoint(const nlohmann::json& j);

}  // namespace entsearch
