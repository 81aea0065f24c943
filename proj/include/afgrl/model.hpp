#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "afgrl/csr.hpp"
#include "afgrl/dense.hpp"
#include "afgrl/rng.hpp"

namespace afgrl {

enum class Mode { kTrain, kEval };

// Per-feature affine normalization state. Train-mode forwards normalize by
// batch statistics over all rows (full-graph training is one batch) and fold
// them into the running estimates; eval-mode forwards use the running
// estimates only.
struct BatchNormParams {
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;

    void init(std::size_t dim);
};

struct EncoderLayer {
    DenseMatrix weight;  // in_dim x out_dim
    BatchNormParams bn;
    double prelu_slope = 0.25;
};

// Graph-convolution encoder: per layer, propagate with the normalized
// adjacency, multiply by the layer weight, normalize, then PReLU.
struct EncoderParams {
    std::vector<EncoderLayer> layers;
    bool use_batchnorm = true;

    std::size_t input_dim() const { return layers.front().weight.rows; }
    std::size_t output_dim() const { return layers.back().weight.cols; }
};

// Two-linear-layer MLP applied to the online embeddings only; the
// architectural asymmetry that keeps the bootstrapped objective from
// collapsing.
struct PredictorParams {
    DenseMatrix w1;  // D x hidden
    BatchNormParams bn;
    double prelu_slope = 0.25;
    DenseMatrix w2;  // hidden x D
    bool use_batchnorm = true;
};

// Online parameters (encoder + predictor, trained by gradient) and target
// parameters (encoder only, updated by exponential moving average).
struct DualNetwork {
    EncoderParams online_encoder;
    PredictorParams predictor;
    EncoderParams target_encoder;
    double tau = 0.99;

    // Glorot-uniform weights; the target starts as an exact copy of the
    // online encoder so the first EMA step is a no-op.
    static DualNetwork init(std::size_t input_dim, std::size_t embedding_dim,
                            std::size_t num_layers, std::size_t predictor_hidden,
                            double tau, Rng& rng);
};

// Activations recorded by a train-mode forward pass, sufficient to replay a
// deterministic backward pass.
struct LayerTape {
    DenseMatrix propagated;       // a_norm * layer input
    DenseMatrix xhat;             // normalized pre-affine values (empty if bn off)
    std::vector<double> inv_std;  // per output column
    DenseMatrix preact;           // PReLU input
};

struct PredictorTape {
    DenseMatrix input;
    DenseMatrix xhat;
    std::vector<double> inv_std;
    DenseMatrix preact;
    DenseMatrix hidden;  // PReLU output feeding w2
};

struct Tape {
    std::vector<LayerTape> layers;
    PredictorTape predictor;
    bool has_predictor = false;
    bool train_mode = true;  // backward requires a train-mode recording
};

struct LayerGrads {
    DenseMatrix weight;
    std::vector<double> gamma;
    std::vector<double> beta;
    double prelu_slope = 0.0;
};

struct PredictorGrads {
    DenseMatrix w1;
    std::vector<double> gamma;
    std::vector<double> beta;
    double prelu_slope = 0.0;
    DenseMatrix w2;
};

// Gradients for the online network only; the target receives none by
// construction (stop-gradient).
struct Gradients {
    std::vector<LayerGrads> encoder;
    PredictorGrads predictor;
    bool has_predictor = false;
};

// N x D embeddings. Train mode records batch statistics into p's running
// estimates; eval mode leaves p untouched and is a pure function. Throws
// NumericError naming the layer if any activation is non-finite.
DenseMatrix encoder_forward(EncoderParams& p, const CsrMatrix& a_norm,
                            const DenseMatrix& x, Mode mode, Tape* tape = nullptr);

DenseMatrix predictor_forward(PredictorParams& p, const DenseMatrix& h, Mode mode,
                              Tape* tape = nullptr);

// Exact reverse-mode gradients of every online parameter given d(loss)/d(output).
// When the tape has a predictor record, loss_grad is with respect to the
// predictor output; otherwise with respect to the encoder output.
Gradients backward(const DualNetwork& net, const CsrMatrix& a_norm, const Tape& tape,
                   const DenseMatrix& loss_grad);

// Adam with bias correction and decoupled weight decay over the online
// parameters. Moments are laid out in the same fixed tensor order the
// checkpoint uses.
struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    std::int64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    static AdamState init(const DualNetwork& net, double learning_rate,
                          double weight_decay);
};

void adam_step(AdamState& state, DualNetwork& net, const Gradients& grads);

// target <- tau * target + (1 - tau) * online, elementwise over every encoder
// tensor including normalization statistics; the predictor is untouched.
void ema_update(DualNetwork& net);

// Fixed-order visitation of every tensor in the network (weights, affine
// parameters, slopes, running statistics). `trainable` marks tensors that
// receive gradients. Order and names define the checkpoint layout.
using TensorVisitor =
    std::function<void(const std::string& name, double* data, std::size_t len,
                       std::vector<std::size_t> shape, bool trainable)>;
void visit_tensors(DualNetwork& net, const TensorVisitor& fn);
void visit_online_trainable(DualNetwork& net, const TensorVisitor& fn);

}  // namespace afgrl
