#pragma once

#include <string>
#include <vector>

#include "tempodiff/common.hpp"
#include "tempodiff/rng.hpp"

namespace tempodiff {

// Dense (batch, time, feature) tensor, row-major doubles. All math in the
// engine runs in 64-bit floats so gradients can be checked against central
// finite differences at tight tolerances.
struct Tensor3 {
    int b = 0, t = 0, d = 0;
    std::vector<double> v;

    Tensor3() = default;
    Tensor3(int b_, int t_, int d_, double fill = 0.0) : b(b_), t(t_), d(d_) {
        if (b_ <= 0 || t_ <= 0 || d_ <= 0) {
            throw DimensionError("Tensor3: shape components must be strictly positive, got (" +
                                 std::to_string(b_) + "," + std::to_string(t_) + "," +
                                 std::to_string(d_) + ")");
        }
        v.assign(static_cast<size_t>(b_) * t_ * d_, fill);
    }

    double& at(int bi, int ti, int di) { return v[(static_cast<size_t>(bi) * t + ti) * d + di]; }
    double at(int bi, int ti, int di) const {
        return v[(static_cast<size_t>(bi) * t + ti) * d + di];
    }
    double* row(int bi, int ti) { return &v[(static_cast<size_t>(bi) * t + ti) * d]; }
    const double* row(int bi, int ti) const { return &v[(static_cast<size_t>(bi) * t + ti) * d]; }

    size_t size() const { return v.size(); }
    int rows() const { return b * t; }
    bool same_shape(const Tensor3& o) const { return b == o.b && t == o.t && d == o.d; }
    std::string shape_str() const {
        return "(" + std::to_string(b) + "," + std::to_string(t) + "," + std::to_string(d) + ")";
    }
};

// A learnable tensor (rank 1..3) paired with a same-shape gradient buffer.
// Gradients accumulate with += until zero_grad(), so parameters shared
// across timesteps (embedding rows) sum their contributions.
struct ParamTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;

    ParamTensor() = default;
    ParamTensor(std::string name_, std::vector<int> shape_) : name(std::move(name_)), shape(std::move(shape_)) {
        if (shape.empty() || shape.size() > 3) {
            throw DimensionError("ParamTensor " + name + ": rank must be 1..3");
        }
        size_t n = 1;
        for (int s : shape) {
            if (s <= 0) throw DimensionError("ParamTensor " + name + ": nonpositive dimension");
            n *= static_cast<size_t>(s);
        }
        values.assign(n, 0.0);
        grad.assign(n, 0.0);
    }

    int dim(size_t i) const { return shape[i]; }
    size_t size() const { return values.size(); }
    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

void zero_grads(const std::vector<ParamTensor*>& params);

// --- layers used by the denoiser (forward + explicit reverse-mode) ---

// Per-timestep affine map: out[b,t,:] = W x[b,t,:] + bias. Pass bias=nullptr
// for a projection without bias.
Tensor3 linear_forward(const Tensor3& x, const ParamTensor& W, const ParamTensor* bias);
// Returns grad_x; accumulates into W.grad (and bias->grad when present).
Tensor3 linear_backward(const Tensor3& x, ParamTensor& W, ParamTensor* bias,
                        const Tensor3& grad_out);

// Width-3 convolution along the time axis, zero-padded so T is preserved.
// K has shape {d_out, d_in, 3}.
Tensor3 conv1d_forward(const Tensor3& x, const ParamTensor& K, const ParamTensor& bias);
Tensor3 conv1d_backward(const Tensor3& x, ParamTensor& K, ParamTensor& bias,
                        const Tensor3& grad_out);

Tensor3 relu(const Tensor3& x);
// Subgradient at exactly 0 is 0.
Tensor3 relu_backward(const Tensor3& x, const Tensor3& grad_out);

// Inverted dropout: kept entries scaled by 1/(1-rate) during training so the
// eval path is the identity. The mask stores that scale (0 for dropped), and
// backward is an elementwise product with it.
struct DropoutResult {
    Tensor3 out;
    Tensor3 mask;
};
DropoutResult dropout(const Tensor3& x, double rate, bool training, Rng& rng);
Tensor3 dropout_backward(const Tensor3& mask, const Tensor3& grad_out);

// pe[2i] = sin(pos / 10000^(2i/dim)), pe[2i+1] = cos(pos / 10000^(2i/dim)).
std::vector<double> sinusoidal_pe(int position, int dim);
// Rows 0..len-1 of the encoding, len*dim row-major.
std::vector<double> sinusoidal_pe_table(int len, int dim);

// Row view of a {V, d} table; backward accumulates into the indexed row.
const double* embedding_lookup(const ParamTensor& table, int index);
void embedding_backward(ParamTensor& table, int index, const double* grad_row);

// --- optimizer ---

struct AdamWConfig {
    double lr0 = 1e-3;
    double weight_decay = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimizerState {
    AdamWConfig hp;
    long step = 0;
    // Parallel to the parameter list handed to init().
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    void init(const std::vector<ParamTensor*>& params);
    bool initialized() const { return !m.empty(); }
};

// One AdamW step at learning rate lr: bias-corrected moments plus decoupled
// weight decay (w -= lr*lambda*w computed from the pre-update weights).
void adamw_step(const std::vector<ParamTensor*>& params, OptimizerState& state, double lr);

struct LRSchedule {
    double base_lr = 1e-3;
    long total_steps = 1;
    long warmup_steps = 0;
};

// Linear ramp over warmup, then base_lr * 0.5 * (1 + cos(pi * step/total)).
double cosine_lr(long step, const LRSchedule& s);

// Scales all gradients by max_norm/norm when the global L2 norm exceeds
// max_norm; returns the pre-clip norm.
double clip_grad_norm(const std::vector<ParamTensor*>& params, double max_norm = 1.0);

}  // namespace tempodiff
