#include "entsearch/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace entsearch {

DenseLayer::DenseLayer(int n_in, int n_out, Activation activation)
    : n_in(n_in), n_out(n_out), activation(activation) {
    if (n_in < 1 || n_out < 1) throw std::invalid_argument("DenseLayer: dimensions must be positive");
    weights.assign(static_cast<std::size_t>(n_out) * n_in, 0.0);
    bias.assign(n_out, 0.0);
}

std::vector<double> dense_forward(const DenseLayer& layer, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != layer.n_in)
        throw std::invalid_argument("dense_forward: input dimension mismatch");
    std::vector<double> y(layer.n_out);
    for (int i = 0; i < layer.n_out; ++i) {
        double acc = layer.bias[i];
        const double* row = layer.weights.data() + static_cast<std::size_t>(i) * layer.n_in;
        for (int j = 0; j < layer.n_in; ++j) acc += row[j] * x[j];
        y[i] = layer.activation == Activation::Tanh ? std::tanh(acc) : acc;
    }
    return y;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - peak);
        sum += probs[i];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

double cross_entropy(const std::vector<double>& probs, int label) {
    if (label < 0 || label >= static_cast<int>(probs.size()))
        throw std::out_of_range("cross_entropy: label out of range");
    return -std::log(std::max(probs[label], 1e-12));
}

DressedNet make_dressed_net(int n_in, EntanglementMatrix beta, int n_out) {
    DressedNet net;
    net.circuit = CircuitSpec(std::move(beta));
    net.input = DenseLayer(n_in, net.circuit.n_q, Activation::Tanh);
    net.theta.assign(net.circuit.n_q, 0.0);
    net.output = DenseLayer(net.circuit.n_q, n_out, Activation::Identity);
    return net;
}

ClassicalBaseline make_baseline(int n_in, int n_q, int n_out) {
    ClassicalBaseline net;
    net.input = DenseLayer(n_in, n_q, Activation::Tanh);
    net.output = DenseLayer(n_q, n_out, Activation::Identity);
    return net;
}

namespace {

void glorot_init(DenseLayer& layer, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / (layer.n_in + layer.n_out));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    for (double& w : layer.weights) w = uniform(rng);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
}

}  // namespace

void initialize(DressedNet& net, std::mt19937_64& rng) {
    glorot_init(net.input, rng);
    std::normal_distribution<double> small(0.0, 0.1);
    for (double& t : net.theta) t = small(rng);
    glorot_init(net.output, rng);
}

void initialize(ClassicalBaseline& net, std::mt19937_64& rng) {
    glorot_init(net.input, rng);
    glorot_init(net.output, rng);
}

Prediction dressed_forward(const DressedNet& net, const std::vector<double>& x) {
    const std::vector<double> f = dense_forward(net.input, x);
    const QuantumOutputs q = forward(net.circuit, f, net.theta);
    Prediction p;
    p.logits = dense_forward(net.output, q.z);
    p.probs = softmax(p.logits);
    return p;
}

Prediction baseline_forward(const ClassicalBaseline& net, const std::vector<double>& x) {
    Prediction p;
    p.logits = dense_forward(net.output, dense_forward(net.input, x));
    p.probs = softmax(p.logits);
    return p;
}

void TrainConfig::check() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (decay_gamma <= 0.0 || decay_gamma > 1.0)
        throw std::invalid_argument("TrainConfig: decay_gamma must be in (0, 1]");
    if (decay_every < 1) throw std::invalid_argument("TrainConfig: decay_every must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
}

namespace {

struct AdamState {
    std::vector<double> m, v;
    long t = 0;
    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double eps = 1e-8;

    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    void step(const std::vector<double*>& params, const std::vector<double>& grad, double lr) {
        ++t;
        const double c1 = 1.0 - std::pow(beta1, t);
        const double c2 = 1.0 - std::pow(beta2, t);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            *params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        }
    }
};

std::vector<double*> param_refs(DressedNet& net) {
    std::vector<double*> refs;
    for (double& w : net.input.weights) refs.push_back(&w);
    for (double& b : net.input.bias) refs.push_back(&b);
    for (double& t : net.theta) refs.push_back(&t);
    for (double& w : net.output.weights) refs.push_back(&w);
    for (double& b : net.output.bias) refs.push_back(&b);
    return refs;
}

std::vector<double*> param_refs(ClassicalBaseline& net) {
    std::vector<double*> refs;
    for (double& w : net.input.weights) refs.push_back(&w);
    for (double& b : net.input.bias) refs.push_back(&b);
    for (double& w : net.output.weights) refs.push_back(&w);
    for (double& b : net.output.bias) refs.push_back(&b);
    return refs;
}

// dL/dlogits for cross-entropy over softmax: probs - onehot(label).
std::vector<double> logit_gradient(const Prediction& pred, int label) {
    std::vector<double> d = pred.probs;
    d[label] -= 1.0;
    return d;
}

// Accumulates one sample's loss gradient, laid out as in param_refs.
void accumulate_gradient(const DressedNet& net, const std::vector<double>& x, int label,
                         std::vector<double>& grad) {
    const int n_q = net.circuit.n_q;
    const std::vector<double> f = dense_forward(net.input, x);
    const QuantumOutputs q = forward(net.circuit, f, net.theta);
    Prediction pred;
    pred.logits = dense_forward(net.output, q.z);
    pred.probs = softmax(pred.logits);

    const std::vector<double> dlogits = logit_gradient(pred, label);
    std::vector<double> dz(n_q, 0.0);
    for (int j = 0; j < net.output.n_out; ++j)
        for (int m = 0; m < n_q; ++m)
            dz[m] += dlogits[j] * net.output.weights[static_cast<std::size_t>(j) * n_q + m];

    const QuantumGradients qg = gradients(net.circuit, f, net.theta);
    std::vector<double> dtheta(n_q, 0.0), df(n_q, 0.0);
    for (int i = 0; i < n_q; ++i)
        for (int j = 0; j < n_q; ++j) {
            dtheta[i] += dz[j] * qg.d_theta[static_cast<std::size_t>(i) * n_q + j];
            df[i] += dz[j] * qg.d_f[static_cast<std::size_t>(i) * n_q + j];
        }

    std::size_t at = 0;
    for (int i = 0; i < n_q; ++i) {
        const double du = df[i] * (1.0 - f[i] * f[i]);  // tanh'
        for (int m = 0; m < net.input.n_in; ++m) grad[at++] += du * x[m];
    }
    for (int i = 0; i < n_q; ++i) grad[at++] += df[i] * (1.0 - f[i] * f[i]);
    for (int i = 0; i < n_q; ++i) grad[at++] += dtheta[i];
    for (int j = 0; j < net.output.n_out; ++j)
        for (int m = 0; m < n_q; ++m) grad[at++] += dlogits[j] * q.z[m];
    for (int j = 0; j < net.output.n_out; ++j) grad[at++] += dlogits[j];
}

void accumulate_gradient(const ClassicalBaseline& net, const std::vector<double>& x, int label,
                         std::vector<double>& grad) {
    const int n_h = net.input.n_out;
    const std::vector<double> h = dense_forward(net.input, x);
    Prediction pred;
    pred.logits = dense_forward(net.output, h);
    pred.probs = softmax(pred.logits);

    const std::vector<double> dlogits = logit_gradient(pred, label);
    std::vector<double> dh(n_h, 0.0);
    for (int j = 0; j < net.output.n_out; ++j)
        for (int m = 0; m < n_h; ++m)
            dh[m] += dlogits[j] * net.output.weights[static_cast<std::size_t>(j) * n_h + m];

    std::size_t at = 0;
    for (int i = 0; i < n_h; ++i) {
        const double du = dh[i] * (1.0 - h[i] * h[i]);
        for (int m = 0; m < net.input.n_in; ++m) grad[at++] += du * x[m];
    }
    for (int i = 0; i < n_h; ++i) grad[at++] += dh[i] * (1.0 - h[i] * h[i]);
    for (int j = 0; j < net.output.n_out; ++j)
        for (int m = 0; m < n_h; ++m) grad[at++] += dlogits[j] * h[m];
    for (int j = 0; j < net.output.n_out; ++j) grad[at++] += dlogits[j];
}

int predicted_class(const std::vector<double>& probs) {
    int best = 0;
    for (int c = 1; c < static_cast<int>(probs.size()); ++c)
        if (probs[c] > probs[best]) best = c;  // ties keep the lower index
    return best;
}

template <typename Model>
double evaluate_impl(const Model& net, const FeatureTable& data, Split split,
                     Prediction (*fwd)(const Model&, const std::vector<double>&)) {
    const auto idx = data.indices_of(split);
    if (idx.empty()) throw std::invalid_argument("evaluate: empty split");
    std::size_t correct = 0;
    for (std::size_t i : idx)
        if (predicted_class(fwd(net, data.rows[i]).probs) == data.labels[i]) ++correct;
    return static_cast<double>(correct) / idx.size();
}

template <typename Model>
TrainHistory train_impl(Model& net, const FeatureTable& data, const TrainConfig& cfg,
                        Prediction (*fwd)(const Model&, const std::vector<double>&),
                        const std::vector<double>* theta_view) {
    cfg.check();
    const auto train_idx = data.indices_of(Split::Train);
    const auto val_idx = data.indices_of(Split::Validation);
    if (train_idx.empty() || val_idx.empty())
        throw std::invalid_argument("train: train and validation splits must be nonempty");
    for (std::size_t i : train_idx)
        if (static_cast<int>(data.rows[i].size()) != net.input.n_in)
            throw std::invalid_argument("train: feature dimension does not match input layer");

    std::mt19937_64 rng(cfg.seed);
    initialize(net, rng);
    const std::vector<double*> params = param_refs(net);

    AdamState adam(params.size());
    std::vector<double> grad(params.size());
    std::vector<std::size_t> order(train_idx);

    TrainHistory history;
    std::vector<double> best_params(params.size());
    for (int e = 1; e <= cfg.epochs; ++e) {
        const double lr = cfg.learning_rate * std::pow(cfg.decay_gamma, e / cfg.decay_every);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t s = start; s < stop; ++s)
                accumulate_gradient(net, data.rows[order[s]], data.labels[order[s]], grad);
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (double& g : grad) g *= inv;
            adam.step(params, grad, lr);
        }

        EpochStats stats;
        stats.learning_rate = lr;
        stats.train_accuracy = evaluate_impl(net, data, Split::Train, fwd);
        stats.val_accuracy = evaluate_impl(net, data, Split::Validation, fwd);
        if (theta_view) stats.theta = *theta_view;
        history.epochs.push_back(std::move(stats));

        if (history.best_epoch == 0 || history.epochs.back().val_accuracy > history.best_val_accuracy) {
            history.best_epoch = e;
            history.best_val_accuracy = history.epochs.back().val_accuracy;
            for (std::size_t i = 0; i < params.size(); ++i) best_params[i] = *params[i];
        }
    }
    for (std::size_t i = 0; i < params.size(); ++i) *params[i] = best_params[i];
    return history;
}

}  // namespace

TrainHistory train(DressedNet& net, const FeatureTable& data, const TrainConfig& cfg) {
    return train_impl(net, data, cfg, &dressed_forward, &net.theta);
}

TrainHistory train(ClassicalBaseline& net, const FeatureTable& data, const TrainConfig& cfg) {
    return train_impl(net, data, cfg, &baseline_forward, nullptr);
}

double evaluate(const DressedNet& net, const FeatureTable& data, Split split) {
    return evaluate_impl(net, data, split, &dressed_forward);
}

double evaluate(const ClassicalBaseline& net, const FeatureTable& data, Split split) {
    return evaluate_impl(net, data, split, &baseline_forward);
}

namespace {

template <typename Model>
std::vector<double> parameters_impl(const Model& net) {
    const auto refs = param_refs(const_cast<Model&>(net));
    std::vector<double> values(refs.size());
    for (std::size_t i = 0; i < refs.size(); ++i) values[i] = *refs[i];
    return values;
}

template <typename Model>
void set_parameters_impl(Model& net, const std::vector<double>& values) {
    const auto refs = param_refs(net);
    if (values.size() != refs.size())
        throw std::invalid_argument("set_parameters: wrong parameter count");
    for (std::size_t i = 0; i < refs.size(); ++i) *refs[i] = values[i];
}

template <typename Model>
std::vector<double> loss_gradient_impl(const Model& net, const std::vector<double>& x, int label) {
    std::vector<double> grad(parameters_impl(net).size(), 0.0);
    accumulate_gradient(net, x, label, grad);
    return grad;
}

}  // namespace

std::vector<double> parameters(const DressedNet& net) { return parameters_impl(net); }
std::vector<double> parameters(const ClassicalBaseline& net) { return parameters_impl(net); }
void set_parameters(DressedNet& net, const std::vector<double>& values) {
    set_parameters_impl(net, values);
}
void set_parameters(ClassicalBaseline& net, const std::vector<double>& values) {
    set_parameters_impl(net, values);
}
std::vector<double> loss_gradient(const DressedNet& net, const std::vector<double>& x, int label) {
    return loss_gradient_impl(net, x, label);
}
std::vector<double> loss_gradient(const ClassicalBaseline& net, const std::vector<double>& x,
                                  int label) {
    return loss_gradient_impl(net, x, label);
}

namespace {

nlohmann::json layer_to_json(const DenseLayer& layer) {
    return {{"n_in", layer.n_in},
            {"n_out", layer.n_out},
            {"activation", layer.activation == Activation::Tanh ? "tanh" : "identity"},
            {"weights", layer.weights},
            {"bias", layer.bias}};
}

DenseLayer layer_from_json(const nlohmann::json& j) {
    const std::string act = j.at("activation").get<std::string>();
    DenseLayer layer(j.at("n_in").get<int>(), j.at("n_out").get<int>(),
                     act == "tanh" ? Activation::Tanh : Activation::Identity);
    layer.weights = j.at("weights").get<std::vector<double>>();
    layer.bias = j.at("bias").get<std::vector<double>>();
    if (layer.weights.size() != static_cast<std::size_t>(layer.n_in) * layer.n_out ||
        layer.bias.size() != static_cast<std::size_t>(layer.n_out))
        throw std::invalid_argument("checkpoint: layer dimensions inconsistent");
    return layer;
}

nlohmann::json config_to_json(const TrainConfig& cfg) {
    return {{"epochs", cfg.epochs},          {"learning_rate", cfg.learning_rate},
            {"decay_gamma", cfg.decay_gamma}, {"decay_every", cfg.decay_every},
            {"batch_size", cfg.batch_size},   {"seed", cfg.seed}};
}

nlohmann::json history_to_json(const TrainHistory& history) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const EpochStats& s : history.epochs) {
        nlohmann::json e = {{"train_accuracy", s.train_accuracy},
                            {"val_accuracy", s.val_accuracy},
                            {"learning_rate", s.learning_rate}};
        if (!s.theta.empty()) e["theta"] = s.theta;
        epochs.push_back(std::move(e));
    }
    return {{"best_epoch", history.best_epoch},
            {"best_val_accuracy", history.best_val_accuracy},
            {"epochs", std::move(epochs)}};
}

}  // namespace

nlohmann::json checkpoint_to_json(const DressedNet& net, const ConfigurationDescriptor& beta,
                                  const TrainConfig& cfg, const TrainHistory& history) {
    return {{"version", 1},
            {"kind", "dressed"},
            {"input_layer", layer_to_json(net.input)},
            {"theta", net.theta},
            {"beta", descriptor_to_json(beta)},
            {"output_layer", layer_to_json(net.output)},
            {"train_config", config_to_json(cfg)},
            {"history", history_to_json(history)}};
}

nlohmann::json checkpoint_to_json(const ClassicalBaseline& net, const TrainConfig& cfg,
                                  const TrainHistory& history) {
    return {{"version", 1},
            {"kind", "baseline"},
            {"input_layer", layer_to_json(net.input)},
            {"output_layer", layer_to_json(net.output)},
            {"train_config", config_to_json(cfg)},
            {"history", history_to_json(history)}};
}

DressedNet dressed_from_checkpoint(const nlohmann::json& j) {
    if (j.at("kind").get<std::string>() != "dressed")
        throw std::invalid_argument("checkpoint: not a dressed model");
    DressedNet net;
    net.input = layer_from_json(j.at("input_layer"));
    net.theta = j.at("theta").get<std::vector<double>>();
    net.circuit = CircuitSpec(descriptor_from_json(j.at("beta")).matrix);
    net.output = layer_from_json(j.at("output_layer"));
    if (net.input.n_out != net.circuit.n_q || static_cast<int>(net.theta.size()) != net.circuit.n_q ||
        net.output.n_in != net.circuit.n_q)
        throw std::invalid_argument("checkpoint: qubit dimensions inconsistent");
    return net;
}

ClassicalBaseline baseline_from_checkpoint(const nlohmann::json& j) {
    if (j.at("kind").get<std::string>() != "baseline")
        throw std::invalid_argument("checkpoint: not a baseline model");
    ClassicalBaseline net;
    net.input = layer_from_json(j.at("input_layer"));
    net.output = layer_from_json(j.at("output_layer"));
    return net;
}

}  // namespace entsearch
