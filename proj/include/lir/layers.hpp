#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lir/ops.hpp"
#include "lir/rng.hpp"

namespace lir {

// Ordered registry of the trainable tensors of a model. Names are stable
// hierarchical paths ("stage3.laa1.ab2.res.conv1.weight") and double as the
// checkpoint addressing scheme, so insertion order is preserved.
template <typename T>
class ParamSet {
public:
    void add(std::string name, Tensor<T> t) {
        LIR_CHECK(index_.find(name) == index_.end(), "duplicate parameter name: " << name);
        index_[name] = items_.size();
        items_.emplace_back(std::move(name), std::move(t));
    }

    Tensor<T>* find(const std::string& name) {
        auto it = index_.find(name);
        return it == index_.end() ? nullptr : &items_[it->second].second;
    }

    std::size_t size() const { return items_.size(); }
    const std::vector<std::pair<std::string, Tensor<T>>>& items() const { return items_; }
    std::vector<std::pair<std::string, Tensor<T>>>& items() { return items_; }

    std::int64_t total_elements() const {
        std::int64_t n = 0;
        for (const auto& [name, t] : items_) {
            (void)name;
            n += t.numel();
        }
        return n;
    }

    void zero_grads() {
        for (auto& [name, t] : items_) {
            (void)name;
            t.zero_grad();
        }
    }

private:
    std::vector<std::pair<std::string, Tensor<T>>> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Kaiming-uniform fan-in initialization, the default for every conv and MLP
// weight; biases start at zero.
template <typename T>
void kaiming_uniform_(Tensor<T>& w, std::int64_t fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    T* d = w.data();
    const std::int64_t n = w.numel();
    for (std::int64_t i = 0; i < n; ++i) d[i] = static_cast<T>(rng.uniform(-bound, bound));
}

template <typename T>
struct Conv2dLayer {
    Tensor<T> weight;  // C_out x C_in/groups x k x k
    Tensor<T> bias;
    ops::Conv2dOpts opts;

    static Conv2dLayer create(std::int64_t in_ch, std::int64_t out_ch, std::int64_t k,
                              std::int64_t stride, std::int64_t padding, Rng& rng,
                              bool zero_init = false, std::int64_t groups = 1) {
        Conv2dLayer l;
        l.weight = Tensor<T>::zeros({out_ch, in_ch / groups, k, k}, true);
        l.bias = Tensor<T>::zeros({out_ch}, true);
        l.opts = {stride, padding, groups};
        if (!zero_init) kaiming_uniform_(l.weight, (in_ch / groups) * k * k, rng);
        return l;
    }

    Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const {
        return ops::conv2d(x, weight, &bias, opts, tape);
    }

    void collect(ParamSet<T>& ps, const std::string& prefix) {
        ps.add(prefix + ".weight", weight);
        ps.add(prefix + ".bias", bias);
    }
};

template <typename T>
struct ConvTranspose2dLayer {
    Tensor<T> weight;  // C_in x C_out x k x k
    Tensor<T> bias;
    ops::ConvTranspose2dOpts opts;

    static ConvTranspose2dLayer create(std::int64_t in_ch, std::int64_t out_ch, std::int64_t k,
                                       std::int64_t stride, std::int64_t padding,
                                       std::int64_t output_padding, Rng& rng) {
        ConvTranspose2dLayer l;
        l.weight = Tensor<T>::zeros({in_ch, out_ch, k, k}, true);
        l.bias = Tensor<T>::zeros({out_ch}, true);
        l.opts = {stride, padding, output_padding};
        kaiming_uniform_(l.weight, in_ch * k * k, rng);
        return l;
    }

    Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const {
        return ops::conv_transpose2d(x, weight, &bias, opts, tape);
    }

    void collect(ParamSet<T>& ps, const std::string& prefix) {
        ps.add(prefix + ".weight", weight);
        ps.add(prefix + ".bias", bias);
    }
};

// Two-layer perceptron applied row-wise: y = relu(x W1 + b1) W2 + b2.
template <typename T>
struct Mlp {
    Tensor<T> w1;  // d_in x d_hidden
    Tensor<T> b1;
    Tensor<T> w2;  // d_hidden x d_out
    Tensor<T> b2;

    static Mlp create(std::int64_t d_in, std::int64_t d_hidden, std::int64_t d_out, Rng& rng) {
        Mlp m;
        m.w1 = Tensor<T>::zeros({d_in, d_hidden}, true);
        m.b1 = Tensor<T>::zeros({d_hidden}, true);
        m.w2 = Tensor<T>::zeros({d_hidden, d_out}, true);
        m.b2 = Tensor<T>::zeros({d_out}, true);
        kaiming_uniform_(m.w1, d_in, rng);
        kaiming_uniform_(m.w2, d_hidden, rng);
        return m;
    }

    Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const {
        auto h = ops::relu(ops::add_row_bias(ops::matmul(x, w1, tape), b1, tape), tape);
        return ops::add_row_bias(ops::matmul(h, w2, tape), b2, tape);
    }

    void collect(ParamSet<T>& ps, const std::string& prefix) {
        ps.add(prefix + ".w1", w1);
        ps.add(prefix + ".b1", b1);
        ps.add(prefix + ".w2", w2);
        ps.add(prefix + ".b2", b2);
    }
};

// Squeeze-and-excitation channel gains: x * sigmoid(up(relu(down(gap(x))))).
template <typename T>
struct ChannelAttention {
    Conv2dLayer<T> down;  // 1x1, C -> C/r
    Conv2dLayer<T> up;    // 1x1, C/r -> C
    bool identity_gate = false;  // test hook: forces s = 1

    static ChannelAttention create(std::int64_t channels, std::int64_t reduction, Rng& rng) {
        LIR_CHECK(channels % reduction == 0, "channel_attention: channels "
                                                 << channels << " not divisible by reduction "
                                                 << reduction);
        ChannelAttention ca;
        ca.down = Conv2dLayer<T>::create(channels, channels / reduction, 1, 1, 0, rng);
        ca.up = Conv2dLayer<T>::create(channels / reduction, channels, 1, 1, 0, rng);
        return ca;
    }

    Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const {
        if (identity_gate) return x;
        auto pooled = ops::global_average_pool(x, tape);
        auto s = ops::sigmoid(up.forward(ops::relu(down.forward(pooled, tape), tape), tape), tape);
        return ops::mul_channels(x, ops::reshape(s, {s.dim(0)}, tape), tape);
    }

    void collect(ParamSet<T>& ps, const std::string& prefix) {
        down.collect(ps, prefix + ".down");
        up.collect(ps, prefix + ".up");
    }
};

// y = x + gamma * conv2(relu(conv1(x))), width-preserving 3x3 trunk.
template <typename T>
struct ResBlock {
    Conv2dLayer<T> conv1, conv2;
    Tensor<T> gamma;

    static ResBlock create(std::int64_t width, Rng& rng, T gamma_init = T(0.1)) {
        ResBlock r;
        r.conv1 = Conv2dLayer<T>::create(width, width, 3, 1, 1, rng);
        r.conv2 = Conv2dLayer<T>::create(width, width, 3, 1, 1, rng);
        r.gamma = Tensor<T>::scalar(gamma_init, true);
        return r;
    }

    Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const {
        auto trunk = conv2.forward(ops::relu(conv1.forward(x, tape), tape), tape);
        return ops::add(x, ops::scale_by(trunk, gamma, 0, tape), tape);
    }

    void collect(ParamSet<T>& ps, const std::string& prefix) {
        conv1.collect(ps, prefix + ".conv1");
        conv2.collect(ps, prefix + ".conv2");
        ps.add(prefix + ".gamma", gamma);
    }
};

// ResBlock with a channel attention module at the trunk tail.
template <typename T>
struct ResCABlock {
    Conv2dLayer<T> conv1, conv2;
    Tensor<T> gamma;
    ChannelAttention<T> ca;

    static ResCABlock create(std::int64_t width, std::int64_t reduction, Rng& rng,
                             T gamma_init = T(0.1)) {
        ResCABlock r;
        r.conv1 = Conv2dLayer<T>::create(width, width, 3, 1, 1, rng);
        r.conv2 = Conv2dLayer<T>::create(width, width, 3, 1, 1, rng);
        r.gamma = Tensor<T>::scalar(gamma_init, true);
        r.ca = ChannelAttention<T>::create(width, reduction, rng);
        return r;
    }

    Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const {
        auto trunk = conv2.forward(ops::relu(conv1.forward(x, tape), tape), tape);
        return ops::add(x, ops::scale_by(ca.forward(trunk, tape), gamma, 0, tape), tape);
    }

    void collect(ParamSet<T>& ps, const std::string& prefix) {
        conv1.collect(ps, prefix + ".conv1");
        conv2.collect(ps, prefix + ".conv2");
        ps.add(prefix + ".gamma", gamma);
        ca.collect(ps, prefix + ".ca");
    }
};

// Channel-split product: first half times second half.
template <typename T>
Tensor<T> simple_gate(const Tensor<T>& x, Tape<T>* tape = nullptr) {
    LIR_CHECK(x.ndim() == 3 && x.dim(0) % 2 == 0,
              "simple_gate: needs an even channel count, got " << shape_str(x.shape()));
    const std::int64_t half = x.dim(0) / 2;
    return ops::multiply(ops::slice_channels(x, 0, half, tape),
                         ops::slice_channels(x, half, 2 * half, tape), tape);
}

}  // namespace lir
