#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gf/errors.hpp"
#include "gf/random.hpp"

namespace gf {

// 64-bit reals by default; -DGF_FLOAT32 switches the net substrate to floats
// (test tolerances assume the 64-bit build).
#ifdef GF_FLOAT32
using real = float;
#else
using real = double;
#endif

using VecXr = Eigen::Matrix<real, Eigen::Dynamic, 1>;
using MatXr = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic>;

enum class Activation { Relu, Softplus, Sine };

inline real activate(Activation a, real x, double w0) {
    switch (a) {
        case Activation::Relu: return x > 0 ? x : real(0);
        case Activation::Softplus:
            if (x > real(30)) return x;
            if (x < real(-30)) return std::exp(x);
            return std::log1p(std::exp(x));
        case Activation::Sine: return std::sin(real(w0) * x);
    }
    return x;
}

inline real activate_deriv(Activation a, real x, double w0) {
    switch (a) {
        case Activation::Relu: return x > 0 ? real(1) : real(0);
        case Activation::Softplus: {
            if (x > real(30)) return real(1);
            const real e = std::exp(x);
            return e / (real(1) + e);
        }
        case Activation::Sine: return real(w0) * std::cos(real(w0) * x);
    }
    return real(1);
}

// Fully connected net: widths = [in, h1, ..., out], one activation tag per
// hidden layer, final layer linear. Parameters mutate only through
// set_param_vector so the revision counter can invalidate stale tapes.
class Mlp {
  public:
    std::vector<int> widths;
    std::vector<MatXr> weights;  // weights[l]: widths[l+1] x widths[l]
    std::vector<VecXr> biases;
    std::vector<Activation> activations;  // size layers()-1
    double sine_w0 = 30.0;

    Mlp() = default;

    static Mlp make(std::vector<int> widths, Activation act, Rng& rng, double w0 = 30.0) {
        Mlp net;
        net.widths = std::move(widths);
        net.sine_w0 = w0;
        const int L = net.layers();
        net.activations.assign(std::max(L - 1, 0), act);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        for (int l = 0; l < L; ++l) {
            const int fan_in = net.widths[l];
            const int fan_out = net.widths[l + 1];
            double wb;
            if (act == Activation::Sine)
                wb = (l == 0) ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / w0;  // SIREN scheme
            else
                wb = std::sqrt(6.0 / (fan_in + fan_out));
            MatXr W(fan_out, fan_in);
            for (int i = 0; i < W.size(); ++i) W.data()[i] = real(wb * unit(rng));
            VecXr b(fan_out);
            const double bb = 1.0 / std::sqrt(double(fan_in));
            for (int i = 0; i < b.size(); ++i) b[i] = real(bb * unit(rng));
            net.weights.push_back(std::move(W));
            net.biases.push_back(std::move(b));
        }
        return net;
    }

    int layers() const { return static_cast<int>(widths.size()) - 1; }
    int input_width() const { return widths.front(); }
    int output_width() const { return widths.back(); }
    std::uint64_t revision() const { return revision_; }

    void zero_last_layer() {
        weights.back().setZero();
        biases.back().setZero();
        ++revision_;
    }

    static std::size_t param_count_for(const std::vector<int>& widths) {
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l)
            n += std::size_t(widths[l + 1]) * widths[l] + widths[l + 1];
        return n;
    }
    std::size_t param_count() const { return param_count_for(widths); }

    VecXr param_vector() const {
        VecXr v(param_count());
        Eigen::Index o = 0;
        for (int l = 0; l < layers(); ++l) {
            v.segment(o, weights[l].size()) = Eigen::Map<const VecXr>(weights[l].data(), weights[l].size());
            o += weights[l].size();
            v.segment(o, biases[l].size()) = biases[l];
            o += biases[l].size();
        }
        return v;
    }

    void set_param_vector(const VecXr& v) {
        if (v.size() != Eigen::Index(param_count()))
            throw ShapeError("Mlp::set_param_vector: size mismatch");
        Eigen::Index o = 0;
        for (int l = 0; l < layers(); ++l) {
            Eigen::Map<VecXr>(weights[l].data(), weights[l].size()) = v.segment(o, weights[l].size());
            o += weights[l].size();
            biases[l] = v.segment(o, biases[l].size());
            o += biases[l].size();
        }
        ++revision_;
    }

  private:
    std::uint64_t revision_ = 0;
};

// Activation record of one batched forward pass. backward() consumes it.
struct Tape {
    std::vector<MatXr> pre;   // pre[l]: pre-activation of layer l (z_l)
    MatXr input;
    std::uint64_t net_revision = 0;
    bool consumed = false;
};

struct MlpGrads {
    std::vector<MatXr> dW;
    std::vector<VecXr> db;

    VecXr flatten() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < dW.size(); ++l) n += dW[l].size() + db[l].size();
        VecXr v(n);
        Eigen::Index o = 0;
        for (std::size_t l = 0; l < dW.size(); ++l) {
            v.segment(o, dW[l].size()) = Eigen::Map<const VecXr>(dW[l].data(), dW[l].size());
            o += dW[l].size();
            v.segment(o, db[l].size()) = db[l];
            o += db[l].size();
        }
        return v;
    }
};

// Forward over a batch; columns are samples. Returns output and the tape.
inline MatXr forward_batch(const Mlp& net, const MatXr& input, Tape* tape = nullptr) {
    if (input.rows() != net.input_width())
        throw ShapeError("forward: input width mismatch");
    if (tape) {
        tape->pre.clear();
        tape->input = input;
        tape->net_revision = net.revision();
        tape->consumed = false;
    }
    MatXr a = input;
    const int L = net.layers();
    for (int l = 0; l < L; ++l) {
        MatXr z = (net.weights[l] * a).colwise() + net.biases[l];
        if (tape) tape->pre.push_back(z);
        if (l < L - 1) {
            const Activation act = net.activations[l];
            a = z.unaryExpr([&](real x) { return activate(act, x, net.sine_w0); });
        } else {
            a = std::move(z);
        }
    }
    return a;
}

inline std::pair<VecXr, Tape> forward(const Mlp& net, const VecXr& input) {
    Tape tape;
    MatXr y = forward_batch(net, input, &tape);
    return {VecXr(y.col(0)), std::move(tape)};
}

// Reverse pass: consumes the tape, returns parameter gradients and the
// gradient with respect to the input (summed per column for batches).
inline std::pair<MlpGrads, MatXr> backward_batch(const Mlp& net, Tape& tape,
                                                 const MatXr& cotangent) {
    if (tape.consumed) throw TapeError("backward: tape already consumed");
    if (tape.net_revision != net.revision())
        throw TapeError("backward: tape is stale (parameters changed)");
    if (cotangent.rows() != net.output_width() || cotangent.cols() != tape.input.cols())
        throw ShapeError("backward: cotangent shape mismatch");
    tape.consumed = true;

    const int L = net.layers();
    MlpGrads grads;
    grads.dW.resize(L);
    grads.db.resize(L);

    // activation of layer l-1 (input for l == 0)
    auto layer_input = [&](int l) -> MatXr {
        if (l == 0) return tape.input;
        const Activation act = net.activations[l - 1];
        return tape.pre[l - 1].unaryExpr([&](real x) { return activate(act, x, net.sine_w0); });
    };

    MatXr g = cotangent;
    for (int l = L - 1; l >= 0; --l) {
        const MatXr a_in = layer_input(l);
        grads.dW[l] = g * a_in.transpose();
        grads.db[l] = g.rowwise().sum();
        MatXr gx = net.weights[l].transpose() * g;
        if (l > 0) {
            const Activation act = net.activations[l - 1];
            g = gx.cwiseProduct(tape.pre[l - 1].unaryExpr(
                [&](real x) { return activate_deriv(act, x, net.sine_w0); }));
        } else {
            g = std::move(gx);
        }
    }
    return {std::move(grads), std::move(g)};
}

inline std::pair<MlpGrads, VecXr> backward(const Mlp& net, Tape& tape, const VecXr& cotangent) {
    auto [grads, dx] = backward_batch(net, tape, cotangent);
    return {std::move(grads), VecXr(dx.col(0))};
}

// ---------------------------------------------------------------------------
// Adam (bias-corrected, as in the original algorithm).
// ---------------------------------------------------------------------------

struct AdamState {
    VecXr m, v;
    long step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_size(Eigen::Index n, double lr, double beta1 = 0.9,
                              double beta2 = 0.999, double eps = 1e-8) {
        AdamState s;
        s.m = VecXr::Zero(n);
        s.v = VecXr::Zero(n);
        s.lr = lr;
        s.beta1 = beta1;
        s.beta2 = beta2;
        s.eps = eps;
        return s;
    }
};

// In-place update. A non-finite gradient aborts the step: parameters and
// state are left untouched.
inline void adam_step(VecXr& params, const VecXr& grads, AdamState& st) {
    if (params.size() != grads.size() || params.size() != st.m.size())
        throw ShapeError("adam_step: shape mismatch");
    if (!grads.allFinite()) throw NonFiniteGradientError("adam_step: non-finite gradient");
    st.step += 1;
    st.m = real(st.beta1) * st.m + real(1.0 - st.beta1) * grads;
    st.v = real(st.beta2) * st.v + real(1.0 - st.beta2) * grads.cwiseProduct(grads);
    const double bc1 = 1.0 - std::pow(st.beta1, double(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, double(st.step));
    const VecXr mhat = st.m / real(bc1);
    const VecXr vhat = st.v / real(bc2);
    params -= (real(st.lr) * mhat.array() / (vhat.array().sqrt() + real(st.eps))).matrix();
}

}  // namespace gf
