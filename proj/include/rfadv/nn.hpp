#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rfadv/rng.hpp"
#include "rfadv/tensor.hpp"

namespace rfadv {

// Per-call activation storage. Forward fills one cache per layer when a
// backward pass will follow; the model itself stays const, so inference and
// attack generation can run concurrently on a shared model.
struct LayerCache {
    virtual ~LayerCache() = default;
};

class Layer {
  public:
    virtual ~Layer() = default;

    virtual std::string type() const = 0;
    virtual std::vector<int> output_shape(const std::vector<int>& in) const = 0;

    // cache may be null (pure inference).
    virtual Tensor forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const = 0;

    // Returns grad wrt input; accumulates parameter grads into param_grads
    // (pre-sized tensors in params() order; empty vector for layers without
    // parameters).
    virtual Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                            std::vector<Tensor>* param_grads) const = 0;

    virtual std::vector<Tensor*> params() { return {}; }
    virtual std::vector<const Tensor*> params() const { return {}; }
    virtual std::vector<std::string> param_names() const { return {}; }

    // Fan-in-scaled uniform init; biases stay zero.
    virtual void init_params(Rng&) {}
};

// ---- shape adapters ----

// Fixed affine input conditioning y = gain * (x - shift). Min-max scaled
// spectrograms sit near 0.5 with small spread; centering them keeps the
// common-mode direction out of the optimizer.
class InputScale final : public Layer {
  public:
    InputScale(double shift, double gain) : shift_(shift), gain_(gain) {}
    std::string type() const override { return "input_scale"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }
    Tensor forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const override;
    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor>* param_grads) const override;

    double shift_, gain_;
};

class Reshape final : public Layer {
  public:
    explicit Reshape(std::vector<int> to) : to_(std::move(to)) {}
    std::string type() const override { return "reshape"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const override;
    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor>* param_grads) const override;

  private:
    std::vector<int> to_;
};

// [rows, cols] -> [cols, rows]; the recurrent presets use it to consume a
// spectrogram as a time sequence (columns become steps).
class Transpose2 final : public Layer {
  public:
    std::string type() const override { return "transpose2"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const override;
    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor>* param_grads) const override;
};

class Flatten final : public Layer {
  public:
    std::string type() const override { return "flatten"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const override;
    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor>* param_grads) const override;
};

// ---- compute layers ----

// Valid (no padding), stride-1 convolution over [H, W, Cin] channels-last.
class Conv2D final : public Layer {
  public:
    Conv2D(int kh, int kw, int cin, int cout);
    std::string type() const override { return "conv2d"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const override;
    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor>* param_grads) const override;
    std::vector<Tensor*> params() override { return {&kernel_, &bias_}; }
    std::vector<const Tensor*> params() const override { return {&kernel_, &bias_}; }
    std::vector<std::string> param_names() const override { return {"kernel", "bias"}; }
    void init_params(Rng& rng) override;

    int kh_, kw_, cin_, cout_;
    Tensor kernel_; // [kh, kw, cin, cout]
    Tensor bias_;   // [cout]
};

class ReLU final : public Layer {
  public:
    std::string type() const override { return "relu"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }
    Tensor forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const override;
    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor>* param_grads) const override;
};

// Non-overlapping window average over [H, W, C]; trailing rows/cols that do
// not fill a window are dropped.
class AvgPool2D final : public Layer {
  public:
    AvgPool2D(int ph, int pw) : ph_(ph), pw_(pw) {}
    std::string type() const override { return "avgpool2d"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const override;
    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor>* param_grads) const override;

    int ph_, pw_;
};

// Mean over time of a [T, H] sequence.
class GlobalAvgPool1D final : public Layer {
  public:
    std::string type() const override { return "gap1d"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const override;
    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor>* param_grads) const override;
};

class Dense final : public Layer {
  public:
    Dense(int in, int out);
    std::string type() const override { return "dense"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const override;
    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor>* param_grads) const override;
    std::vector<Tensor*> params() override { return {&w_, &b_}; }
    std::vector<const Tensor*> params() const override { return {&w_, &b_}; }
    std::vector<std::string> param_names() const override { return {"W", "b"}; }
    void init_params(Rng& rng) override;

    int in_, out_;
    Tensor w_; // [out, in]
    Tensor b_; // [out]
};

class Softmax final : public Layer {
  public:
    std::string type() const override { return "softmax"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }
    Tensor forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const override;
    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor>* param_grads) const override;
};

// Sequence-to-sequence LSTM over [T, in] -> [T, hidden]; h0 = c0 = 0.
// Gate order in the stacked weights: input, forget, cell, output.
class LSTMLayer final : public Layer {
  public:
    LSTMLayer(int in, int hidden);
    std::string type() const override { return "lstm"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const override;
    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor>* param_grads) const override;
    std::vector<Tensor*> params() override { return {&wx_, &wh_, &b_}; }
    std::vector<const Tensor*> params() const override { return {&wx_, &wh_, &b_}; }
    std::vector<std::string> param_names() const override { return {"Wx", "Wh", "b"}; }
    void init_params(Rng& rng) override;

    int in_, hidden_;
    Tensor wx_; // [4*hidden, in]
    Tensor wh_; // [4*hidden, hidden]
    Tensor b_;  // [4*hidden]
};

// Sequence-to-sequence GRU over [T, in] -> [T, hidden]; h0 = 0.
// Gate order: update, reset, candidate; the reset gate scales the previous
// hidden state before it enters the candidate (h_new uses Wh_n (r . h)).
class GRULayer final : public Layer {
  public:
    GRULayer(int in, int hidden);
    std::string type() const override { return "gru"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, std::unique_ptr<LayerCache>* cache) const override;
    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor>* param_grads) const override;
    std::vector<Tensor*> params() override { return {&wx_, &wh_, &b_}; }
    std::vector<const Tensor*> params() const override { return {&wx_, &wh_, &b_}; }
    std::vector<std::string> param_names() const override { return {"Wx", "Wh", "b"}; }
    void init_params(Rng& rng) override;

    int in_, hidden_;
    Tensor wx_; // [3*hidden, in]
    Tensor wh_; // [3*hidden, hidden]
    Tensor b_;  // [3*hidden]
};

// ---- model ----

struct SampleSet {
    std::vector<Tensor> x;
    std::vector<int> labels;
};

struct TrainConfig {
    int epochs = 30;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    // decoupled weight decay; 0 disables it
    double weight_decay = 1e-3;
    uint64_t seed = 0;
};

class Model {
  public:
    Model() = default;
    Model(std::vector<int> input_shape, int n_classes)
        : input_shape_(std::move(input_shape)), n_classes_(n_classes) {}

    Model(Model&&) = default;
    Model& operator=(Model&&) = default;
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

    // Probability vector over classes; nonnegative, sums to 1.
    Tensor forward(const Tensor& x) const;

    // Argmax of forward(); ties resolve to the lowest index.
    int predict(const Tensor& x) const;

    struct Gradients {
        std::vector<std::vector<Tensor>> per_layer; // params() order per layer
        Tensor input;
        Tensor probs;
        double loss = 0.0;
    };
    // Reverse-mode gradients of cross_entropy(forward(x), label) wrt every
    // parameter and wrt x.
    Gradients backward(const Tensor& x, int label) const;

    const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }
    std::vector<std::unique_ptr<Layer>>& layers() { return layers_; }
    const std::vector<int>& input_shape() const { return input_shape_; }
    int n_classes() const { return n_classes_; }

    std::vector<std::pair<std::string, Tensor*>> named_params();
    std::vector<std::pair<std::string, const Tensor*>> named_params() const;

    // Preset provenance, kept for checkpoints.
    std::string kind = "custom";
    double scale = 1.0;
    uint64_t init_seed = 0;

  private:
    std::vector<int> input_shape_;
    int n_classes_ = 0;
    std::vector<std::unique_ptr<Layer>> layers_;
};

enum class PresetKind { cnn, lstm, gru };

PresetKind preset_kind_from_string(const std::string& s);
std::string to_string(PresetKind k);

// The three reference classifiers. `scale` multiplies the hidden widths
// (recurrent units, conv channel counts); scale 1 is the full-size network.
// input_shape is the spectrogram shape {freq_bins, time_frames}.
Model build_preset(PresetKind kind, std::vector<int> input_shape, int n_classes, double scale,
                   uint64_t seed);

// -log(probs[label]) with the probability clamped at 1e-15.
double cross_entropy(const Tensor& probs, int label);

constexpr double kProbClamp = 1e-15;

// Minibatch Adam on cross-entropy. Deterministic given cfg.seed: fixed
// shuffle schedule and ordered gradient reduction across the batch.
// on_epoch (optional) receives (epoch index, mean training loss).
Model train(Model model, const SampleSet& data, const TrainConfig& cfg,
            const std::function<void(int, double)>& on_epoch = {});

} // namespace rfadv
