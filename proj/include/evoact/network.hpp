#pragma once

// Small feedforward networks whose hidden activation is an arbitrary expression tree,
// trained with mini-batch ADAM, balanced class weights, dropout, L2 and early stopping.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "evoact/activation.hpp"
#include "evoact/dataio.hpp"
#include "evoact/error.hpp"
#include "evoact/rng.hpp"
#include "evoact/weight_init.hpp"

namespace evoact {

enum class OutputKind { binary_sigmoid, softmax, linear };
enum class FitnessMetric { f1, categorical_accuracy, neg_mse };

inline constexpr double kProbabilityClamp = 1e-7;
inline constexpr double kWorstFitness = -std::numeric_limits<double>::infinity();

struct NetworkSpec {
    int input_dim = 1;
    std::vector<int> hidden{16};
    double dropout_rate = 0.0;
    bool l2_enabled = false;
    double l2_lambda = 0.01;
    OutputKind output = OutputKind::binary_sigmoid;
    int output_units = 1;

    // Dropout and L2 apply to every hidden layer but the first.
    [[nodiscard]] static bool regularized(std::size_t hidden_index) noexcept { return hidden_index >= 1; }

    void validate() const
    {
        if (input_dim < 1) throw std::invalid_argument("NetworkSpec: input_dim must be >= 1");
        if (hidden.empty()) throw std::invalid_argument("NetworkSpec: at least one hidden layer is required");
        for (int u : hidden) {
            if (u < 1) throw std::invalid_argument("NetworkSpec: hidden units must be >= 1");
        }
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("NetworkSpec: dropout_rate must be in [0,1)");
        if (!(l2_lambda >= 0.0)) throw std::invalid_argument("NetworkSpec: l2_lambda must be >= 0");
        const int expected = output == OutputKind::softmax ? output_units : 1;
        if (output_units != expected || output_units < 1 || (output == OutputKind::softmax && output_units < 2))
            throw std::invalid_argument("NetworkSpec: output_units does not match the output kind");
    }
};

struct TrainConfig {
    int max_epochs = 50;
    int batch_size = 32;
    std::optional<int> patience = 10;
    bool checkpoint = false;
    double learning_rate = 0.001;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-7;
    bool class_weighting = true;
    FitnessMetric fitness_metric = FitnessMetric::f1;

    void validate() const
    {
        if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
        if (patience && *patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
        if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    }
};

[[nodiscard]] inline OutputKind output_kind_for(TargetKind kind) noexcept
{
    switch (kind) {
    case TargetKind::binary: return OutputKind::binary_sigmoid;
    case TargetKind::multiclass: return OutputKind::softmax;
    case TargetKind::regression: return OutputKind::linear;
    }
    return OutputKind::linear;
}

[[nodiscard]] inline FitnessMetric fitness_metric_for(TargetKind kind) noexcept
{
    switch (kind) {
    case TargetKind::binary: return FitnessMetric::f1;
    case TargetKind::multiclass: return FitnessMetric::categorical_accuracy;
    case TargetKind::regression: return FitnessMetric::neg_mse;
    }
    return FitnessMetric::neg_mse;
}

struct DenseLayer {
    Eigen::MatrixXd weights; // fan_in x fan_out
    Eigen::RowVectorXd bias;
};

struct Model {
    std::vector<DenseLayer> layers; // hidden layers, then the output layer
};

// The hidden-layer nonlinearity: an evolved tree or the SELU baseline (not a GP primitive).
// Owns scratch buffers; give each training its own instance.
class HiddenActivation {
public:
    struct Selu {};

    explicit HiddenActivation(ActivationTree tree) : impl_(TreeKernel(std::move(tree))) {}
    explicit HiddenActivation(Selu) : impl_(Selu{}) {}

    [[nodiscard]] static HiddenActivation selu() { return HiddenActivation(Selu{}); }

    void apply(std::span<const double> z, std::span<double> value, std::span<double> deriv)
    {
        if (auto* kernel = std::get_if<TreeKernel>(&impl_)) {
            (*kernel)(z, value, deriv);
            return;
        }
        for (std::size_t i = 0; i < z.size(); ++i) {
            value[i] = scalar::selu(z[i]);
            deriv[i] = scalar::selu_derivative(z[i]);
        }
    }

    [[nodiscard]] double operator()(double x) const
    {
        if (const auto* kernel = std::get_if<TreeKernel>(&impl_)) return eval(kernel->tree(), x);
        return scalar::selu(x);
    }

    [[nodiscard]] std::string label() const
    {
        if (const auto* kernel = std::get_if<TreeKernel>(&impl_)) return to_string(kernel->tree());
        return "selu";
    }

private:
    std::variant<TreeKernel, Selu> impl_;
};

[[nodiscard]] inline Model initialize_model(const NetworkSpec& spec, InitScheme init, Rng& rng)
{
    spec.validate();
    Model m;
    int fan_in = spec.input_dim;
    auto add_layer = [&](int fan_out) {
        Rng layer_rng = rng.fork();
        m.layers.push_back({sample_weights(init, fan_in, fan_out, fan_in, fan_out, layer_rng), Eigen::RowVectorXd::Zero(fan_out)});
        fan_in = fan_out;
    };
    for (int units : spec.hidden) add_layer(units);
    add_layer(spec.output == OutputKind::softmax ? spec.output_units : 1);
    return m;
}

struct ForwardPass {
    std::vector<Eigen::MatrixXd> inputs;      // inputs[l] feeds layer l (inputs[0] is the batch)
    std::vector<Eigen::MatrixXd> derivatives; // f'(z) of each hidden layer
    std::vector<Eigen::MatrixXd> masks;       // scaled keep-masks; empty when dropout is off
    Eigen::MatrixXd output;
};

namespace detail {

inline void apply_head(Eigen::MatrixXd& z, OutputKind kind)
{
    switch (kind) {
    case OutputKind::binary_sigmoid: z = z.unaryExpr([](double v) { return scalar::sigmoid(v); }); break;
    case OutputKind::softmax:
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            const double m = z.row(i).maxCoeff();
            z.row(i) = (z.row(i).array() - m).exp();
            z.row(i) /= z.row(i).sum();
        }
        break;
    case OutputKind::linear: break;
    }
    if (!z.allFinite()) throw NonFinite("non-finite network output");
}

} // namespace detail

// Hidden layers: affine then the activation elementwise; inverted dropout on regularized
// hidden layers only while training.
[[nodiscard]] inline ForwardPass forward_pass(const Model& model, const NetworkSpec& spec, HiddenActivation& act, const Eigen::MatrixXd& batch,
                                              bool training, Rng& rng)
{
    if (batch.cols() != spec.input_dim) throw std::invalid_argument("forward: batch width does not match input_dim");
    ForwardPass fp;
    const std::size_t n_hidden = model.layers.size() - 1;
    fp.inputs.reserve(model.layers.size());
    fp.inputs.push_back(batch);
    for (std::size_t l = 0; l < n_hidden; ++l) {
        const DenseLayer& layer = model.layers[l];
        Eigen::MatrixXd z = (fp.inputs.back() * layer.weights).rowwise() + layer.bias;
        Eigen::MatrixXd a(z.rows(), z.cols());
        Eigen::MatrixXd d(z.rows(), z.cols());
        const auto count = static_cast<std::size_t>(z.size());
        act.apply({z.data(), count}, {a.data(), count}, {d.data(), count});
        Eigen::MatrixXd mask;
        if (training && spec.dropout_rate > 0.0 && NetworkSpec::regularized(l)) {
            const double keep = 1.0 - spec.dropout_rate;
            mask.resize(a.rows(), a.cols());
            for (Eigen::Index k = 0; k < mask.size(); ++k) mask.data()[k] = rng.uniform() < keep ? 1.0 / keep : 0.0;
            a.array() *= mask.array();
        }
        fp.derivatives.push_back(std::move(d));
        fp.masks.push_back(std::move(mask));
        fp.inputs.push_back(std::move(a));
    }
    const DenseLayer& out = model.layers.back();
    fp.output = (fp.inputs.back() * out.weights).rowwise() + out.bias;
    detail::apply_head(fp.output, spec.output);
    return fp;
}

[[nodiscard]] inline Eigen::MatrixXd forward(const Model& model, const NetworkSpec& spec, HiddenActivation& act, const Eigen::MatrixXd& batch,
                                             bool training, Rng& rng)
{
    return forward_pass(model, spec, act, batch, training, rng).output;
}

[[nodiscard]] inline Eigen::MatrixXd predict(const Model& model, const NetworkSpec& spec, HiddenActivation& act, const Eigen::MatrixXd& x)
{
    Rng unused(0);
    return forward(model, spec, act, x, false, unused);
}

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::RowVectorXd> bias;
};

// Mean (optionally sample-weighted) loss over the batch plus the L2 penalty, and its
// gradient w.r.t. every parameter. Weighted loss is sum(w_i * l_i) / n.
inline double loss_and_gradients(const Model& model, const NetworkSpec& spec, HiddenActivation& act, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& y, std::span<const double> sample_weights, bool training, Rng& rng,
                                 Gradients* grads)
{
    const ForwardPass fp = forward_pass(model, spec, act, x, training, rng);
    const Eigen::Index n = x.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(fp.output.rows(), fp.output.cols());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = sample_weights.empty() ? 1.0 : sample_weights[static_cast<std::size_t>(i)];
        switch (spec.output) {
        case OutputKind::binary_sigmoid: {
            const double p = fp.output(i, 0);
            const double pc = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
            const double t = y(i);
            loss += w * -(t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc));
            if (p == pc) delta(i, 0) = w * (p - t) * inv_n;
            break;
        }
        case OutputKind::softmax: {
            const auto cls = static_cast<Eigen::Index>(y(i));
            const double p = fp.output(i, cls);
            const double pc = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
            loss += w * -std::log(pc);
            if (p == pc) {
                delta.row(i) = fp.output.row(i) * (w * inv_n);
                delta(i, cls) -= w * inv_n;
            }
            break;
        }
        case OutputKind::linear: {
            const double r = fp.output(i, 0) - y(i);
            loss += w * r * r;
            delta(i, 0) = w * 2.0 * r * inv_n;
            break;
        }
        }
    }
    loss *= inv_n;

    const std::size_t n_layers = model.layers.size();
    const bool l2 = spec.l2_enabled && spec.l2_lambda > 0.0;
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
        if (l2 && NetworkSpec::regularized(l)) loss += spec.l2_lambda * model.layers[l].weights.squaredNorm();
    }
    if (!std::isfinite(loss)) throw NonFinite("non-finite loss");
    if (grads == nullptr) return loss;

    grads->weights.resize(n_layers);
    grads->bias.resize(n_layers);
    for (std::size_t l = n_layers; l-- > 0;) {
        grads->weights[l] = fp.inputs[l].transpose() * delta;
        grads->bias[l] = delta.colwise().sum();
        const bool hidden = l + 1 < n_layers;
        if (hidden && l2 && NetworkSpec::regularized(l)) grads->weights[l] += 2.0 * spec.l2_lambda * model.layers[l].weights;
        if (l == 0) break;
        Eigen::MatrixXd upstream = delta * model.layers[l].weights.transpose();
        const std::size_t h = l - 1; // hidden layer producing inputs[l]
        if (fp.masks[h].size() != 0) upstream.array() *= fp.masks[h].array();
        delta = upstream.array() * fp.derivatives[h].array();
    }
    return loss;
}

// ADAM with the bias correction folded into the step size; epsilon is not rescaled.
class Adam {
public:
    Adam(double lr, double beta1, double beta2, double epsilon) : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

    void step(Model& model, const Gradients& g)
    {
        if (m_w_.empty()) {
            for (const auto& layer : model.layers) {
                m_w_.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
                v_w_.push_back(m_w_.back());
                m_b_.push_back(Eigen::RowVectorXd::Zero(layer.bias.size()));
                v_b_.push_back(m_b_.back());
            }
        }
        ++t_;
        const double lr_t = lr_ * std::sqrt(1.0 - std::pow(beta2_, t_)) / (1.0 - std::pow(beta1_, t_));
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            update(model.layers[l].weights, g.weights[l], m_w_[l], v_w_[l], lr_t);
            update(model.layers[l].bias, g.bias[l], m_b_[l], v_b_[l], lr_t);
        }
    }

private:
    template <class P, class G, class M>
    void update(P& param, const G& grad, M& m, M& v, double lr_t) const
    {
        m = beta1_ * m + (1.0 - beta1_) * grad;
        v = beta2_ * v + (1.0 - beta2_) * grad.cwiseAbs2();
        param.array() -= lr_t * m.array() / (v.array().sqrt() + epsilon_);
    }

    double lr_, beta1_, beta2_, epsilon_;
    int t_ = 0;
    std::vector<Eigen::MatrixXd> m_w_, v_w_;
    std::vector<Eigen::RowVectorXd> m_b_, v_b_;
};

struct Metric {
    std::string name;
    double value;

    friend bool operator==(const Metric&, const Metric&) = default;
};
using MetricSet = std::vector<Metric>;

struct BinaryCounts {
    long tp = 0, fp = 0, fn = 0, tn = 0;
};

// Precision and recall are 0 when their denominators are empty; F1 is 0 when P + R = 0.
[[nodiscard]] inline MetricSet binary_metrics(const BinaryCounts& c)
{
    const double precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    const double recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    const double total = static_cast<double>(c.tp + c.fp + c.fn + c.tn);
    const double accuracy = total > 0.0 ? static_cast<double>(c.tp + c.tn) / total : 0.0;
    return {{"precision", precision}, {"recall", recall}, {"f1", f1}, {"accuracy", accuracy}};
}

// Binary outputs are positive above 0.5; multiclass uses argmax; regression reports MSE.
[[nodiscard]] inline MetricSet compute_metrics(const Eigen::MatrixXd& outputs, const Eigen::VectorXd& targets, OutputKind kind)
{
    if (outputs.rows() != targets.size()) throw std::invalid_argument("compute_metrics: length mismatch");
    const Eigen::Index n = targets.size();
    switch (kind) {
    case OutputKind::binary_sigmoid: {
        BinaryCounts c;
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool pred = outputs(i, 0) > 0.5;
            const bool truth = targets(i) > 0.5;
            if (pred && truth) ++c.tp;
            else if (pred) ++c.fp;
            else if (truth) ++c.fn;
            else ++c.tn;
        }
        return binary_metrics(c);
    }
    case OutputKind::softmax: {
        long hits = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index arg;
            outputs.row(i).maxCoeff(&arg);
            hits += arg == static_cast<Eigen::Index>(targets(i));
        }
        return {{"categorical_accuracy", n > 0 ? static_cast<double>(hits) / static_cast<double>(n) : 0.0}};
    }
    case OutputKind::linear: {
        const double mse = n > 0 ? (outputs.col(0) - targets).squaredNorm() / static_cast<double>(n) : 0.0;
        return {{"mse", mse}};
    }
    }
    return {};
}

[[nodiscard]] inline double metric_value(const MetricSet& metrics, const std::string& name)
{
    for (const auto& m : metrics) {
        if (m.name == name) return m.value;
    }
    throw std::invalid_argument("metric '" + name + "' not present");
}

// Maximize-convention fitness.
[[nodiscard]] inline double fitness_from(const MetricSet& metrics, FitnessMetric metric)
{
    switch (metric) {
    case FitnessMetric::f1: return metric_value(metrics, "f1");
    case FitnessMetric::categorical_accuracy: return metric_value(metrics, "categorical_accuracy");
    case FitnessMetric::neg_mse: return -metric_value(metrics, "mse");
    }
    return kWorstFitness;
}

// weight_c = n_total / (n_classes * n_c); throws MissingClass for an empty class.
[[nodiscard]] inline std::vector<double> balanced_class_weights(const Eigen::VectorXd& targets, int n_classes)
{
    std::vector<long> counts(static_cast<std::size_t>(n_classes), 0);
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
        const auto c = static_cast<long>(targets(i));
        if (c < 0 || c >= n_classes) throw std::invalid_argument("balanced_class_weights: label out of range");
        ++counts[static_cast<std::size_t>(c)];
    }
    std::vector<double> weights(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) throw MissingClass(c);
        weights[c] = static_cast<double>(targets.size()) / (static_cast<double>(n_classes) * static_cast<double>(counts[c]));
    }
    return weights;
}

// Tracks the best validation fitness; improvement means strictly greater.
class EarlyStopping {
public:
    explicit EarlyStopping(std::optional<int> patience) : patience_(patience) {}

    // Returns true when training should stop after this epoch.
    bool update(int epoch, double fitness)
    {
        if (best_epoch_ == 0 || fitness > best_) {
            best_ = fitness;
            best_epoch_ = epoch;
            improved_ = true;
            wait_ = 0;
            return false;
        }
        improved_ = false;
        ++wait_;
        return patience_ && wait_ >= *patience_;
    }

    [[nodiscard]] bool improved() const noexcept { return improved_; }
    [[nodiscard]] int best_epoch() const noexcept { return best_epoch_; }
    [[nodiscard]] double best() const noexcept { return best_; }

private:
    std::optional<int> patience_;
    double best_ = kWorstFitness;
    int best_epoch_ = 0;
    int wait_ = 0;
    bool improved_ = false;
};

struct EpochRecord {
    int epoch;
    double train_loss;
    double val_fitness;
};

struct TrainedModel {
    Model model;
    int best_epoch = 0;
    double validation_fitness = kWorstFitness;
    std::vector<EpochRecord> history;
    bool diverged = false;
};

inline void write_history_jsonl(std::ostream& out, const std::vector<EpochRecord>& history)
{
    auto num = [](double v) {
        if (!std::isfinite(v)) return std::string("null");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& r : history) {
        out << "{\"epoch\":" << r.epoch << ",\"train_loss\":" << num(r.train_loss) << ",\"val_fitness\":" << num(r.val_fitness) << "}\n";
    }
}

[[nodiscard]] inline MetricSet evaluate(const Model& model, const NetworkSpec& spec, HiddenActivation& act, const Samples& data)
{
    return compute_metrics(predict(model, spec, act, data.x), data.y, spec.output);
}

// Mini-batch ADAM. Each epoch reshuffles the training rows; the last partial batch is kept.
// With patience set, training stops after `patience` epochs without improvement. Best-epoch
// weights are restored whenever early stopping or checkpointing is on. A non-finite
// activation or loss aborts with worst fitness.
[[nodiscard]] inline TrainedModel train(const NetworkSpec& spec, HiddenActivation& act, InitScheme init, const Samples& train_data,
                                        const Samples& validation, const TrainConfig& cfg, Rng& rng)
{
    cfg.validate();
    if (train_data.rows() == 0 || validation.rows() == 0) throw std::invalid_argument("train: empty training or validation data");
    TrainedModel result;
    Rng init_rng = rng.fork();
    Rng shuffle_rng = rng.fork();
    Rng dropout_rng = rng.fork();
    Model model = initialize_model(spec, init, init_rng);

    const std::size_t n = train_data.rows();
    std::vector<double> sample_weight;
    if (cfg.class_weighting && spec.output != OutputKind::linear) {
        const int k = spec.output == OutputKind::softmax ? spec.output_units : 2;
        std::vector<long> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < train_data.y.size(); ++i) ++counts[static_cast<std::size_t>(train_data.y(i))];
        const auto present = std::count_if(counts.begin(), counts.end(), [](long c) { return c > 0; });
        sample_weight.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const long c = counts[static_cast<std::size_t>(train_data.y(static_cast<Eigen::Index>(i)))];
            sample_weight[i] = static_cast<double>(n) / (static_cast<double>(present) * static_cast<double>(c));
        }
    }

    Adam adam(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
    EarlyStopping stopper(cfg.patience);
    const bool restore_best = cfg.checkpoint || cfg.patience.has_value();
    Model best = model;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Gradients grads;
    Eigen::MatrixXd bx;
    Eigen::VectorXd by;
    std::vector<double> bw;

    try {
        for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
            shuffle(order, shuffle_rng);
            double loss_sum = 0.0;
            for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
                const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
                const auto m = static_cast<Eigen::Index>(end - start);
                bx.resize(m, train_data.x.cols());
                by.resize(m);
                bw.resize(sample_weight.empty() ? 0 : end - start);
                for (std::size_t i = start; i < end; ++i) {
                    const auto r = static_cast<Eigen::Index>(i - start);
                    bx.row(r) = train_data.x.row(static_cast<Eigen::Index>(order[i]));
                    by(r) = train_data.y(static_cast<Eigen::Index>(order[i]));
                    if (!bw.empty()) bw[i - start] = sample_weight[order[i]];
                }
                loss_sum += static_cast<double>(m) * loss_and_gradients(model, spec, act, bx, by, bw, true, dropout_rng, &grads);
                adam.step(model, grads);
            }
            const double val = fitness_from(evaluate(model, spec, act, validation), cfg.fitness_metric);
            result.history.push_back({epoch, loss_sum / static_cast<double>(n), val});
            const bool stop = stopper.update(epoch, val);
            if (stopper.improved()) best = model;
            if (stop) break;
        }
    } catch (const NonFinite&) {
        result.model = std::move(model);
        result.diverged = true;
        result.best_epoch = 0;
        result.validation_fitness = kWorstFitness;
        return result;
    }
    result.model = restore_best ? std::move(best) : std::move(model);
    result.best_epoch = stopper.best_epoch();
    result.validation_fitness = restore_best ? stopper.best() : result.history.back().val_fitness;
    return result;
}

} // namespace evoact
