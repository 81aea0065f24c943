#include "afgrl/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "afgrl/error.hpp"

namespace afgrl {

namespace {

constexpr double kBnEps = 1e-5;       // variance guard; zero-variance columns pass through
constexpr double kBnMomentum = 0.1;   // running = (1-m)*running + m*batch

DenseMatrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    DenseMatrix w(fan_in, fan_out);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : w.data) v = rng.uniform(-limit, limit);
    return w;
}

// Train-mode normalization by batch statistics; returns the affine output and
// fills xhat/inv_std for the tape. Running estimates are updated in place.
DenseMatrix batchnorm_train(BatchNormParams& bn, const DenseMatrix& v, DenseMatrix* xhat_out,
                            std::vector<double>* inv_std_out) {
    const std::size_t n = v.rows, d = v.cols;
    std::vector<double> mean(d, 0.0), var(d, 0.0), inv_std(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = v.row(i);
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    }
    for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = v.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double c = row[j] - mean[j];
            var[j] += c * c;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        var[j] /= static_cast<double>(n);
        inv_std[j] = 1.0 / std::sqrt(var[j] + kBnEps);
        bn.running_mean[j] = (1.0 - kBnMomentum) * bn.running_mean[j] + kBnMomentum * mean[j];
        bn.running_var[j] = (1.0 - kBnMomentum) * bn.running_var[j] + kBnMomentum * var[j];
    }

    DenseMatrix xhat(n, d);
    DenseMatrix out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = v.row(i);
        double* xr = xhat.row(i);
        double* orow = out.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            xr[j] = (row[j] - mean[j]) * inv_std[j];
            orow[j] = bn.gamma[j] * xr[j] + bn.beta[j];
        }
    }
    if (xhat_out) *xhat_out = std::move(xhat);
    if (inv_std_out) *inv_std_out = std::move(inv_std);
    return out;
}

DenseMatrix batchnorm_eval(const BatchNormParams& bn, const DenseMatrix& v) {
    const std::size_t n = v.rows, d = v.cols;
    DenseMatrix out(n, d);
    for (std::size_t j = 0; j < d; ++j) {
        const double inv_std = 1.0 / std::sqrt(bn.running_var[j] + kBnEps);
        const double scale = bn.gamma[j] * inv_std;
        const double shift = bn.beta[j] - bn.gamma[j] * bn.running_mean[j] * inv_std;
        for (std::size_t i = 0; i < n; ++i) out(i, j) = scale * v(i, j) + shift;
    }
    return out;
}

DenseMatrix prelu(const DenseMatrix& y, double slope) {
    DenseMatrix out = y;
    for (double& v : out.data) {
        if (v <= 0.0) v *= slope;
    }
    return out;
}

// Backward through train-mode batch normalization. xhat and inv_std come from
// the tape; returns d(loss)/d(pre-normalization input).
DenseMatrix batchnorm_backward(const BatchNormParams& bn, const DenseMatrix& dy,
                               const DenseMatrix& xhat, const std::vector<double>& inv_std,
                               std::vector<double>& ggamma, std::vector<double>& gbeta) {
    const std::size_t n = dy.rows, d = dy.cols;
    ggamma.assign(d, 0.0);
    gbeta.assign(d, 0.0);
    std::vector<double> s1(d, 0.0), s2(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* dyr = dy.row(i);
        const double* xr = xhat.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            gbeta[j] += dyr[j];
            ggamma[j] += dyr[j] * xr[j];
            const double dxhat = dyr[j] * bn.gamma[j];
            s1[j] += dxhat;
            s2[j] += dxhat * xr[j];
        }
    }
    DenseMatrix dv(n, d);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* dyr = dy.row(i);
        const double* xr = xhat.row(i);
        double* dvr = dv.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double dxhat = dyr[j] * bn.gamma[j];
            dvr[j] = inv_std[j] * (dxhat - inv_n * s1[j] - inv_n * xr[j] * s2[j]);
        }
    }
    return dv;
}

void check_finite(const DenseMatrix& m, const std::string& where) {
    if (!m.all_finite()) throw NumericError(where + " produced non-finite activations");
}

void adam_update_tensor(AdamState& st, std::size_t idx, double* params, const double* grads,
                        std::size_t len, double bc1, double bc2) {
    std::vector<double>& m = st.m[idx];
    std::vector<double>& v = st.v[idx];
    if (m.size() != len) {
        throw std::invalid_argument("adam_step: moment/parameter shape mismatch");
    }
    for (std::size_t i = 0; i < len; ++i) {
        const double g = grads[i];
        m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * g;
        v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        const double decay = st.weight_decay * params[i];
        params[i] -= st.learning_rate * (mhat / (std::sqrt(vhat) + st.eps) + decay);
    }
}

}  // namespace

void BatchNormParams::init(std::size_t dim) {
    gamma.assign(dim, 1.0);
    beta.assign(dim, 0.0);
    running_mean.assign(dim, 0.0);
    running_var.assign(dim, 1.0);
}

DualNetwork DualNetwork::init(std::size_t input_dim, std::size_t embedding_dim,
                              std::size_t num_layers, std::size_t predictor_hidden,
                              double tau, Rng& rng) {
    if (num_layers == 0) throw std::invalid_argument("DualNetwork::init: need >= 1 layer");
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("DualNetwork::init: tau in [0,1]");
    DualNetwork net;
    net.tau = tau;
    for (std::size_t l = 0; l < num_layers; ++l) {
        EncoderLayer layer;
        const std::size_t in = l == 0 ? input_dim : embedding_dim;
        layer.weight = glorot_uniform(in, embedding_dim, rng);
        layer.bn.init(embedding_dim);
        net.online_encoder.layers.push_back(std::move(layer));
    }
    net.predictor.w1 = glorot_uniform(embedding_dim, predictor_hidden, rng);
    net.predictor.bn.init(predictor_hidden);
    net.predictor.w2 = glorot_uniform(predictor_hidden, embedding_dim, rng);
    net.target_encoder = net.online_encoder;
    return net;
}

DenseMatrix encoder_forward(EncoderParams& p, const CsrMatrix& a_norm, const DenseMatrix& x,
                            Mode mode, Tape* tape) {
    if (p.layers.empty()) throw std::invalid_argument("encoder_forward: no layers");
    if (x.cols != p.input_dim()) {
        throw std::invalid_argument("encoder_forward: input has " + std::to_string(x.cols) +
                                    " features, layer 1 expects " +
                                    std::to_string(p.input_dim()));
    }
    if (tape) {
        tape->layers.clear();
        tape->train_mode = mode == Mode::kTrain;
    }
    DenseMatrix h = x;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        EncoderLayer& layer = p.layers[l];
        LayerTape lt;
        DenseMatrix propagated = spmm(a_norm, h);
        DenseMatrix v = matmul(propagated, layer.weight);
        DenseMatrix preact;
        if (p.use_batchnorm) {
            preact = mode == Mode::kTrain
                         ? batchnorm_train(layer.bn, v, tape ? &lt.xhat : nullptr,
                                           tape ? &lt.inv_std : nullptr)
                         : batchnorm_eval(layer.bn, v);
        } else {
            preact = std::move(v);
        }
        h = prelu(preact, layer.prelu_slope);
        check_finite(h, "encoder layer " + std::to_string(l + 1));
        if (tape) {
            lt.propagated = std::move(propagated);
            lt.preact = std::move(preact);
            tape->layers.push_back(std::move(lt));
        }
    }
    return h;
}

DenseMatrix predictor_forward(PredictorParams& p, const DenseMatrix& h, Mode mode, Tape* tape) {
    if (h.cols != p.w1.rows) {
        throw std::invalid_argument("predictor_forward: input width " + std::to_string(h.cols) +
                                    " does not match w1 rows " + std::to_string(p.w1.rows));
    }
    PredictorTape pt;
    DenseMatrix p1 = matmul(h, p.w1);
    DenseMatrix preact;
    if (p.use_batchnorm) {
        preact = mode == Mode::kTrain
                     ? batchnorm_train(p.bn, p1, tape ? &pt.xhat : nullptr,
                                       tape ? &pt.inv_std : nullptr)
                     : batchnorm_eval(p.bn, p1);
    } else {
        preact = std::move(p1);
    }
    DenseMatrix hidden = prelu(preact, p.prelu_slope);
    DenseMatrix z = matmul(hidden, p.w2);
    check_finite(z, "predictor");
    if (tape) {
        pt.input = h;
        pt.preact = std::move(preact);
        pt.hidden = std::move(hidden);
        tape->predictor = std::move(pt);
        tape->has_predictor = true;
        tape->train_mode = mode == Mode::kTrain;
    }
    return z;
}

namespace {

// PReLU backward shared by encoder layers and the predictor: fills the
// downstream gradient and returns the slope gradient.
double prelu_backward(const DenseMatrix& upstream, const DenseMatrix& preact, double slope,
                      DenseMatrix& dpre) {
    dpre = DenseMatrix(upstream.rows, upstream.cols);
    double gslope = 0.0;
    for (std::size_t i = 0; i < upstream.data.size(); ++i) {
        const double y = preact.data[i];
        if (y > 0.0) {
            dpre.data[i] = upstream.data[i];
        } else {
            dpre.data[i] = upstream.data[i] * slope;
            gslope += upstream.data[i] * y;
        }
    }
    return gslope;
}

}  // namespace

Gradients backward(const DualNetwork& net, const CsrMatrix& a_norm, const Tape& tape,
                   const DenseMatrix& loss_grad) {
    if (!tape.train_mode) {
        throw std::invalid_argument("backward: tape must come from a train-mode forward");
    }
    if (tape.layers.size() != net.online_encoder.layers.size()) {
        throw std::invalid_argument("backward: tape/parameter layer count mismatch");
    }

    Gradients grads;
    grads.has_predictor = tape.has_predictor;
    DenseMatrix dh;

    if (tape.has_predictor) {
        const PredictorParams& p = net.predictor;
        const PredictorTape& pt = tape.predictor;
        if (loss_grad.rows != pt.hidden.rows || loss_grad.cols != p.w2.cols) {
            throw std::invalid_argument("backward: loss gradient shape mismatch");
        }
        grads.predictor.w2 = matmul_at(pt.hidden, loss_grad);
        DenseMatrix dhidden = matmul_bt(loss_grad, p.w2);
        DenseMatrix dpre;
        grads.predictor.prelu_slope = prelu_backward(dhidden, pt.preact, p.prelu_slope, dpre);
        DenseMatrix dp1;
        if (p.use_batchnorm) {
            dp1 = batchnorm_backward(p.bn, dpre, pt.xhat, pt.inv_std, grads.predictor.gamma,
                                     grads.predictor.beta);
        } else {
            dp1 = std::move(dpre);
            grads.predictor.gamma.assign(p.bn.gamma.size(), 0.0);
            grads.predictor.beta.assign(p.bn.beta.size(), 0.0);
        }
        grads.predictor.w1 = matmul_at(pt.input, dp1);
        dh = matmul_bt(dp1, p.w1);
    } else {
        dh = loss_grad;
    }

    grads.encoder.resize(net.online_encoder.layers.size());
    for (std::size_t l = net.online_encoder.layers.size(); l-- > 0;) {
        const EncoderLayer& layer = net.online_encoder.layers[l];
        const LayerTape& lt = tape.layers[l];
        if (dh.rows != lt.preact.rows || dh.cols != lt.preact.cols) {
            throw std::invalid_argument("backward: tape shape mismatch at encoder layer " +
                                        std::to_string(l + 1));
        }
        LayerGrads& lg = grads.encoder[l];
        DenseMatrix dpre;
        lg.prelu_slope = prelu_backward(dh, lt.preact, layer.prelu_slope, dpre);
        DenseMatrix dv;
        if (net.online_encoder.use_batchnorm) {
            dv = batchnorm_backward(layer.bn, dpre, lt.xhat, lt.inv_std, lg.gamma, lg.beta);
        } else {
            dv = std::move(dpre);
            lg.gamma.assign(layer.bn.gamma.size(), 0.0);
            lg.beta.assign(layer.bn.beta.size(), 0.0);
        }
        lg.weight = matmul_at(lt.propagated, dv);
        if (l > 0) {
            DenseMatrix du = matmul_bt(dv, layer.weight);
            dh = spmm(a_norm, du);  // a_norm is symmetric, so A^T = A
        }
    }
    return grads;
}

AdamState AdamState::init(const DualNetwork& net, double learning_rate, double weight_decay) {
    AdamState st;
    st.learning_rate = learning_rate;
    st.weight_decay = weight_decay;
    auto add = [&](std::size_t len) {
        st.m.emplace_back(len, 0.0);
        st.v.emplace_back(len, 0.0);
    };
    for (const EncoderLayer& layer : net.online_encoder.layers) {
        add(layer.weight.data.size());
        add(layer.bn.gamma.size());
        add(layer.bn.beta.size());
        add(1);
    }
    add(net.predictor.w1.data.size());
    add(net.predictor.bn.gamma.size());
    add(net.predictor.bn.beta.size());
    add(1);
    add(net.predictor.w2.data.size());
    return st;
}

void adam_step(AdamState& st, DualNetwork& net, const Gradients& grads) {
    if (!grads.has_predictor) {
        throw std::invalid_argument("adam_step: gradients must cover encoder and predictor");
    }
    if (grads.encoder.size() != net.online_encoder.layers.size()) {
        throw std::invalid_argument("adam_step: gradient/parameter layer count mismatch");
    }
    st.step += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));

    std::size_t idx = 0;
    auto update = [&](double* params, const double* g, std::size_t len) {
        adam_update_tensor(st, idx++, params, g, len, bc1, bc2);
    };
    for (std::size_t l = 0; l < net.online_encoder.layers.size(); ++l) {
        EncoderLayer& layer = net.online_encoder.layers[l];
        const LayerGrads& lg = grads.encoder[l];
        if (!layer.weight.same_shape(lg.weight)) {
            throw std::invalid_argument("adam_step: weight gradient shape mismatch at layer " +
                                        std::to_string(l + 1));
        }
        update(layer.weight.data.data(), lg.weight.data.data(), layer.weight.data.size());
        update(layer.bn.gamma.data(), lg.gamma.data(), layer.bn.gamma.size());
        update(layer.bn.beta.data(), lg.beta.data(), layer.bn.beta.size());
        update(&layer.prelu_slope, &lg.prelu_slope, 1);
    }
    PredictorParams& p = net.predictor;
    update(p.w1.data.data(), grads.predictor.w1.data.data(), p.w1.data.size());
    update(p.bn.gamma.data(), grads.predictor.gamma.data(), p.bn.gamma.size());
    update(p.bn.beta.data(), grads.predictor.beta.data(), p.bn.beta.size());
    update(&p.prelu_slope, &grads.predictor.prelu_slope, 1);
    update(p.w2.data.data(), grads.predictor.w2.data.data(), p.w2.data.size());
}

void ema_update(DualNetwork& net) {
    if (net.online_encoder.layers.size() != net.target_encoder.layers.size()) {
        throw std::invalid_argument("ema_update: online/target structure mismatch");
    }
    const double tau = net.tau;
    auto blend = [tau](double* t, const double* o, std::size_t len) {
        for (std::size_t i = 0; i < len; ++i) t[i] = tau * t[i] + (1.0 - tau) * o[i];
    };
    for (std::size_t l = 0; l < net.online_encoder.layers.size(); ++l) {
        EncoderLayer& o = net.online_encoder.layers[l];
        EncoderLayer& t = net.target_encoder.layers[l];
        if (!o.weight.same_shape(t.weight) || o.bn.gamma.size() != t.bn.gamma.size()) {
            throw std::invalid_argument("ema_update: online/target structure mismatch at layer " +
                                        std::to_string(l + 1));
        }
        blend(t.weight.data.data(), o.weight.data.data(), o.weight.data.size());
        blend(t.bn.gamma.data(), o.bn.gamma.data(), o.bn.gamma.size());
        blend(t.bn.beta.data(), o.bn.beta.data(), o.bn.beta.size());
        blend(t.bn.running_mean.data(), o.bn.running_mean.data(), o.bn.running_mean.size());
        blend(t.bn.running_var.data(), o.bn.running_var.data(), o.bn.running_var.size());
        blend(&t.prelu_slope, &o.prelu_slope, 1);
    }
}

namespace {

void visit_encoder(EncoderParams& enc, const std::string& prefix, bool trainable_side,
                   const TensorVisitor& fn) {
    for (std::size_t l = 0; l < enc.layers.size(); ++l) {
        EncoderLayer& layer = enc.layers[l];
        const std::string base = prefix + std::to_string(l) + ".";
        fn(base + "weight", layer.weight.data.data(), layer.weight.data.size(),
           {layer.weight.rows, layer.weight.cols}, trainable_side);
        fn(base + "bn_gamma", layer.bn.gamma.data(), layer.bn.gamma.size(),
           {layer.bn.gamma.size()}, trainable_side);
        fn(base + "bn_beta", layer.bn.beta.data(), layer.bn.beta.size(),
           {layer.bn.beta.size()}, trainable_side);
        fn(base + "bn_running_mean", layer.bn.running_mean.data(), layer.bn.running_mean.size(),
           {layer.bn.running_mean.size()}, false);
        fn(base + "bn_running_var", layer.bn.running_var.data(), layer.bn.running_var.size(),
           {layer.bn.running_var.size()}, false);
        fn(base + "prelu", &layer.prelu_slope, 1, {1}, trainable_side);
    }
}

}  // namespace

void visit_tensors(DualNetwork& net, const TensorVisitor& fn) {
    visit_encoder(net.online_encoder, "encoder.", true, fn);
    PredictorParams& p = net.predictor;
    fn("predictor.w1", p.w1.data.data(), p.w1.data.size(), {p.w1.rows, p.w1.cols}, true);
    fn("predictor.bn_gamma", p.bn.gamma.data(), p.bn.gamma.size(), {p.bn.gamma.size()}, true);
    fn("predictor.bn_beta", p.bn.beta.data(), p.bn.beta.size(), {p.bn.beta.size()}, true);
    fn("predictor.bn_running_mean", p.bn.running_mean.data(), p.bn.running_mean.size(),
       {p.bn.running_mean.size()}, false);
    fn("predictor.bn_running_var", p.bn.running_var.data(), p.bn.running_var.size(),
       {p.bn.running_var.size()}, false);
    fn("predictor.prelu", &p.prelu_slope, 1, {1}, true);
    fn("predictor.w2", p.w2.data.data(), p.w2.data.size(), {p.w2.rows, p.w2.cols}, true);
    visit_encoder(net.target_encoder, "target.", false, fn);
}

void visit_online_trainable(DualNetwork& net, const TensorVisitor& fn) {
    visit_tensors(net, [&](const std::string& name, double* data, std::size_t len,
                           std::vector<std::size_t> shape, bool trainable) {
        if (trainable) fn(name, data, len, std::move(shape), true);
    });
}

}  // namespace afgrl
