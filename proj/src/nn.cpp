#include "tempodiff/nn.hpp"

#include <algorithm>
#include <cmath>

namespace tempodiff {

namespace {

void require_same_shape(const Tensor3& a, const Tensor3& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                             b.shape_str());
    }
}

}  // namespace

void zero_grads(const std::vector<ParamTensor*>& params) {
    for (ParamTensor* p : params) p->zero_grad();
}

Tensor3 linear_forward(const Tensor3& x, const ParamTensor& W, const ParamTensor* bias) {
    if (W.shape.size() != 2) throw DimensionError("linear_forward: W must be rank 2");
    const int d_out = W.dim(0), d_in = W.dim(1);
    if (x.d != d_in) {
        throw DimensionError("linear_forward: input width " + std::to_string(x.d) +
                             " does not match W " + std::to_string(d_out) + "x" +
                             std::to_string(d_in));
    }
    if (bias && (bias->shape.size() != 1 || bias->dim(0) != d_out)) {
        throw DimensionError("linear_forward: bias width mismatch");
    }

    Tensor3 out(x.b, x.t, d_out);
    const int rows = x.rows();
    const double* bvals = bias ? bias->values.data() : nullptr;
    for (int r = 0; r < rows; ++r) {
        const double* xr = &x.v[static_cast<size_t>(r) * d_in];
        double* yr = &out.v[static_cast<size_t>(r) * d_out];
        for (int o = 0; o < d_out; ++o) {
            const double* w = &W.values[static_cast<size_t>(o) * d_in];
            double acc = bvals ? bvals[o] : 0.0;
            for (int i = 0; i < d_in; ++i) acc += w[i] * xr[i];
            yr[o] = acc;
        }
    }
    return out;
}

Tensor3 linear_backward(const Tensor3& x, ParamTensor& W, ParamTensor* bias,
                        const Tensor3& grad_out) {
    const int d_out = W.dim(0), d_in = W.dim(1);
    if (x.d != d_in) throw DimensionError("linear_backward: x width mismatch");
    if (grad_out.b != x.b || grad_out.t != x.t || grad_out.d != d_out) {
        throw DimensionError("linear_backward: grad_out shape " + grad_out.shape_str() +
                             " does not match forward output");
    }

    Tensor3 grad_x(x.b, x.t, d_in);
    const int rows = x.rows();
    double* wg = W.grad.data();
    double* bg = bias ? bias->grad.data() : nullptr;
    for (int r = 0; r < rows; ++r) {
        const double* xr = &x.v[static_cast<size_t>(r) * d_in];
        const double* gr = &grad_out.v[static_cast<size_t>(r) * d_out];
        double* gx = &grad_x.v[static_cast<size_t>(r) * d_in];
        for (int o = 0; o < d_out; ++o) {
            const double go = gr[o];
            if (go == 0.0) continue;
            const double* w = &W.values[static_cast<size_t>(o) * d_in];
            double* wgo = &wg[static_cast<size_t>(o) * d_in];
            for (int i = 0; i < d_in; ++i) {
                gx[i] += go * w[i];
                wgo[i] += go * xr[i];
            }
            if (bg) bg[o] += go;
        }
    }
    return grad_x;
}

Tensor3 conv1d_forward(const Tensor3& x, const ParamTensor& K, const ParamTensor& bias) {
    if (K.shape.size() != 3 || K.dim(2) != 3) {
        throw DimensionError("conv1d_forward: kernel must be {d_out, d_in, 3}");
    }
    const int d_out = K.dim(0), d_in = K.dim(1);
    if (x.d != d_in) {
        throw DimensionError("conv1d_forward: input width " + std::to_string(x.d) +
                             " does not match kernel d_in " + std::to_string(d_in));
    }
    if (x.t < 1) throw DimensionError("conv1d_forward: time dimension must be >= 1");
    if (bias.shape.size() != 1 || bias.dim(0) != d_out) {
        throw DimensionError("conv1d_forward: bias width mismatch");
    }

    // Repack K as three contiguous (d_out x d_in) matrices, one per tap, so
    // the hot loop is a plain row dot product.
    std::vector<double> taps(static_cast<size_t>(3) * d_out * d_in);
    for (int o = 0; o < d_out; ++o) {
        for (int i = 0; i < d_in; ++i) {
            for (int k = 0; k < 3; ++k) {
                taps[(static_cast<size_t>(k) * d_out + o) * d_in + i] =
                    K.values[(static_cast<size_t>(o) * d_in + i) * 3 + k];
            }
        }
    }

    Tensor3 out(x.b, x.t, d_out);
    for (int bi = 0; bi < x.b; ++bi) {
        for (int ti = 0; ti < x.t; ++ti) {
            double* yr = out.row(bi, ti);
            for (int o = 0; o < d_out; ++o) yr[o] = bias.values[o];
            for (int k = 0; k < 3; ++k) {
                const int src = ti + k - 1;
                if (src < 0 || src >= x.t) continue;  // zero padding
                const double* xr = x.row(bi, src);
                const double* tap = &taps[static_cast<size_t>(k) * d_out * d_in];
                for (int o = 0; o < d_out; ++o) {
                    const double* w = &tap[static_cast<size_t>(o) * d_in];
                    double acc = 0.0;
                    for (int i = 0; i < d_in; ++i) acc += w[i] * xr[i];
                    yr[o] += acc;
                }
            }
        }
    }
    return out;
}

Tensor3 conv1d_backward(const Tensor3& x, ParamTensor& K, ParamTensor& bias,
                        const Tensor3& grad_out) {
    const int d_out = K.dim(0), d_in = K.dim(1);
    if (grad_out.b != x.b || grad_out.t != x.t || grad_out.d != d_out) {
        throw DimensionError("conv1d_backward: grad_out shape " + grad_out.shape_str() +
                             " does not match forward output");
    }
    if (x.d != d_in) throw DimensionError("conv1d_backward: x width mismatch");

    // Transposed taps for the input gradient: KT[k][i][o] = K[o][i][k].
    std::vector<double> taps_t(static_cast<size_t>(3) * d_in * d_out);
    for (int o = 0; o < d_out; ++o) {
        for (int i = 0; i < d_in; ++i) {
            for (int k = 0; k < 3; ++k) {
                taps_t[(static_cast<size_t>(k) * d_in + i) * d_out + o] =
                    K.values[(static_cast<size_t>(o) * d_in + i) * 3 + k];
            }
        }
    }

    Tensor3 grad_x(x.b, x.t, d_in);
    std::vector<double> kg(static_cast<size_t>(3) * d_out * d_in, 0.0);  // [k][o][i]
    for (int bi = 0; bi < x.b; ++bi) {
        for (int ti = 0; ti < x.t; ++ti) {
            const double* gr = grad_out.row(bi, ti);
            for (int o = 0; o < d_out; ++o) bias.grad[o] += gr[o];
            for (int k = 0; k < 3; ++k) {
                const int src = ti + k - 1;
                if (src < 0 || src >= x.t) continue;
                // grad wrt x[src] from out[ti] through tap k
                double* gx = grad_x.row(bi, src);
                const double* tap = &taps_t[static_cast<size_t>(k) * d_in * d_out];
                for (int i = 0; i < d_in; ++i) {
                    const double* w = &tap[static_cast<size_t>(i) * d_out];
                    double acc = 0.0;
                    for (int o = 0; o < d_out; ++o) acc += w[o] * gr[o];
                    gx[i] += acc;
                }
                // kernel gradient: correlation of x with grad_out
                const double* xr = x.row(bi, src);
                double* kgk = &kg[static_cast<size_t>(k) * d_out * d_in];
                for (int o = 0; o < d_out; ++o) {
                    const double go = gr[o];
                    if (go == 0.0) continue;
                    double* row = &kgk[static_cast<size_t>(o) * d_in];
                    for (int i = 0; i < d_in; ++i) row[i] += go * xr[i];
                }
            }
        }
    }
    for (int o = 0; o < d_out; ++o) {
        for (int i = 0; i < d_in; ++i) {
            for (int k = 0; k < 3; ++k) {
                K.grad[(static_cast<size_t>(o) * d_in + i) * 3 + k] +=
                    kg[(static_cast<size_t>(k) * d_out + o) * d_in + i];
            }
        }
    }
    return grad_x;
}

Tensor3 relu(const Tensor3& x) {
    Tensor3 out = x;
    for (double& v : out.v) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor3 relu_backward(const Tensor3& x, const Tensor3& grad_out) {
    require_same_shape(x, grad_out, "relu_backward");
    Tensor3 g = grad_out;
    for (size_t i = 0; i < g.v.size(); ++i) {
        if (x.v[i] <= 0.0) g.v[i] = 0.0;
    }
    return g;
}

DropoutResult dropout(const Tensor3& x, double rate, bool training, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ParameterError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
    }
    DropoutResult r;
    if (!training || rate == 0.0) {
        r.out = x;
        r.mask = Tensor3(x.b, x.t, x.d, 1.0);
        return r;
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    r.mask = Tensor3(x.b, x.t, x.d);
    r.out = x;
    for (size_t i = 0; i < r.out.v.size(); ++i) {
        const double m = rng.uniform() < rate ? 0.0 : keep_scale;
        r.mask.v[i] = m;
        r.out.v[i] *= m;
    }
    return r;
}

Tensor3 dropout_backward(const Tensor3& mask, const Tensor3& grad_out) {
    require_same_shape(mask, grad_out, "dropout_backward");
    Tensor3 g = grad_out;
    for (size_t i = 0; i < g.v.size(); ++i) g.v[i] *= mask.v[i];
    return g;
}

std::vector<double> sinusoidal_pe(int position, int dim) {
    if (dim <= 0 || dim % 2 != 0) {
        throw ParameterError("sinusoidal_pe: dim must be a positive even integer");
    }
    if (position < 0) throw ParameterError("sinusoidal_pe: position must be nonnegative");
    std::vector<double> pe(static_cast<size_t>(dim));
    for (int i = 0; i < dim / 2; ++i) {
        const double freq = std::pow(10000.0, -2.0 * i / dim);
        pe[2 * i] = std::sin(position * freq);
        pe[2 * i + 1] = std::cos(position * freq);
    }
    return pe;
}

std::vector<double> sinusoidal_pe_table(int len, int dim) {
    if (len <= 0) throw ParameterError("sinusoidal_pe_table: len must be positive");
    std::vector<double> table(static_cast<size_t>(len) * dim);
    for (int p = 0; p < len; ++p) {
        const auto pe = sinusoidal_pe(p, dim);
        std::copy(pe.begin(), pe.end(), table.begin() + static_cast<size_t>(p) * dim);
    }
    return table;
}

const double* embedding_lookup(const ParamTensor& table, int index) {
    if (table.shape.size() != 2) throw DimensionError("embedding_lookup: table must be rank 2");
    if (index < 0 || index >= table.dim(0)) {
        throw IndexError("embedding_lookup: index " + std::to_string(index) +
                         " out of range [0, " + std::to_string(table.dim(0)) + ")");
    }
    return &table.values[static_cast<size_t>(index) * table.dim(1)];
}

void embedding_backward(ParamTensor& table, int index, const double* grad_row) {
    if (index < 0 || index >= table.dim(0)) {
        throw IndexError("embedding_backward: index out of range");
    }
    double* row = &table.grad[static_cast<size_t>(index) * table.dim(1)];
    for (int i = 0; i < table.dim(1); ++i) row[i] += grad_row[i];
}

void OptimizerState::init(const std::vector<ParamTensor*>& params) {
    step = 0;
    m.clear();
    v.clear();
    m.reserve(params.size());
    v.reserve(params.size());
    for (const ParamTensor* p : params) {
        m.emplace_back(p->size(), 0.0);
        v.emplace_back(p->size(), 0.0);
    }
}

void adamw_step(const std::vector<ParamTensor*>& params, OptimizerState& state, double lr) {
    if (!state.initialized()) state.init(params);
    if (state.m.size() != params.size()) {
        throw ParameterError("adamw_step: optimizer state does not match parameter list");
    }
    state.step += 1;
    const auto& hp = state.hp;
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
    for (size_t pi = 0; pi < params.size(); ++pi) {
        ParamTensor& p = *params[pi];
        std::vector<double>& mp = state.m[pi];
        std::vector<double>& vp = state.v[pi];
        for (size_t i = 0; i < p.size(); ++i) {
            const double g = p.grad[i];
            mp[i] = hp.beta1 * mp[i] + (1.0 - hp.beta1) * g;
            vp[i] = hp.beta2 * vp[i] + (1.0 - hp.beta2) * g * g;
            const double mhat = mp[i] / bc1;
            const double vhat = vp[i] / bc2;
            // decoupled decay uses the pre-update weight
            p.values[i] -= lr * hp.weight_decay * p.values[i];
            p.values[i] -= lr * mhat / (std::sqrt(vhat) + hp.epsilon);
        }
    }
}

double cosine_lr(long step, const LRSchedule& s) {
    if (s.base_lr <= 0.0) throw ParameterError("cosine_lr: base_lr must be positive");
    if (s.total_steps <= 0) throw ParameterError("cosine_lr: total_steps must be positive");
    if (step >= s.total_steps) return 0.0;
    if (step < s.warmup_steps) {
        return s.base_lr * static_cast<double>(step + 1) / static_cast<double>(s.warmup_steps);
    }
    const double frac = static_cast<double>(step) / static_cast<double>(s.total_steps);
    return s.base_lr * 0.5 * (1.0 + std::cos(M_PI * frac));
}

double clip_grad_norm(const std::vector<ParamTensor*>& params, double max_norm) {
    if (max_norm <= 0.0) throw ParameterError("clip_grad_norm: max_norm must be positive");
    double sq = 0.0;
    for (const ParamTensor* p : params) {
        for (double g : p->grad) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (ParamTensor* p : params) {
            for (double& g : p->grad) g *= scale;
        }
    }
    return norm;
}

}  // namespace tempodiff
