#include "tempodiff/diffusion.hpp"

#include <cmath>

namespace tempodiff {

NoiseSchedule cosine_beta_schedule(int steps, double s, double beta_clip) {
    if (steps < 2) throw ParameterError("cosine_beta_schedule: need at least 2 steps");
    if (s <= 0.0) throw ParameterError("cosine_beta_schedule: s must be positive");
    if (beta_clip <= 0.0 || beta_clip >= 1.0) {
        throw ParameterError("cosine_beta_schedule: beta_clip must be in (0, 1)");
    }

    auto f = [&](double t) {
        const double arg = ((t / steps + s) / (1.0 + s)) * (M_PI / 2.0);
        const double c = std::cos(arg);
        return c * c;
    };

    NoiseSchedule sched;
    sched.steps = steps;
    sched.s = s;
    sched.beta_clip = beta_clip;
    sched.beta.resize(steps);
    sched.alpha.resize(steps);
    sched.alpha_bar.resize(steps);
    sched.sigma.resize(steps);

    const double f0 = f(0.0);
    double prev_target = 1.0;  // f(0)/f(0)
    for (int t = 1; t <= steps; ++t) {
        const double target = f(static_cast<double>(t)) / f0;
        double beta = 1.0 - target / prev_target;
        beta = std::min(beta, beta_clip);
        prev_target = target;
        sched.beta[t - 1] = beta;
        sched.alpha[t - 1] = 1.0 - beta;
    }
    double prod = 1.0;
    for (int t = 1; t <= steps; ++t) {
        prod *= sched.alpha[t - 1];
        sched.alpha_bar[t - 1] = prod;
        const double ab_prev = t == 1 ? 1.0 : sched.alpha_bar[t - 2];
        const double var =
            (1.0 - ab_prev) / (1.0 - sched.alpha_bar[t - 1]) * sched.beta[t - 1];
        sched.sigma[t - 1] = std::sqrt(std::max(var, 0.0));
    }
    return sched;
}

QSampleResult q_sample(const Tensor3& x0, const std::vector<int>& t, const NoiseSchedule& sched,
                       Rng& rng) {
    Tensor3 eps(x0.b, x0.t, x0.d);
    for (double& e : eps.v) e = rng.normal();
    QSampleResult r;
    r.xt = q_sample_with_eps(x0, t, sched, eps);
    r.eps = std::move(eps);
    return r;
}

Tensor3 q_sample_with_eps(const Tensor3& x0, const std::vector<int>& t,
                          const NoiseSchedule& sched, const Tensor3& eps) {
    if (static_cast<int>(t.size()) != x0.b) {
        throw DimensionError("q_sample: t vector length must equal batch size");
    }
    if (!x0.same_shape(eps)) throw DimensionError("q_sample: eps shape mismatch");
    Tensor3 xt(x0.b, x0.t, x0.d);
    const size_t per_item = static_cast<size_t>(x0.t) * x0.d;
    for (int bi = 0; bi < x0.b; ++bi) {
        const double ab = sched.alpha_bar_at(t[bi]);  // validates range
        const double sa = std::sqrt(ab);
        const double sn = std::sqrt(1.0 - ab);
        const size_t off = static_cast<size_t>(bi) * per_item;
        for (size_t i = 0; i < per_item; ++i) {
            xt.v[off + i] = sa * x0.v[off + i] + sn * eps.v[off + i];
        }
    }
    return xt;
}

double simple_loss(const Tensor3& eps, const Tensor3& eps_pred) {
    if (!eps.same_shape(eps_pred)) {
        throw DimensionError("simple_loss: shape mismatch " + eps.shape_str() + " vs " +
                             eps_pred.shape_str());
    }
    double acc = 0.0;
    for (size_t i = 0; i < eps.v.size(); ++i) {
        const double d = eps.v[i] - eps_pred.v[i];
        acc += d * d;
    }
    return acc / static_cast<double>(eps.v.size());
}

std::pair<double, Tensor3> simple_loss_and_grad(const Tensor3& eps, const Tensor3& eps_pred,
                                                const Tensor3* mask, bool mask_loss) {
    if (!eps.same_shape(eps_pred)) throw DimensionError("simple_loss_and_grad: shape mismatch");
    if (mask_loss && !mask) throw ParameterError("simple_loss_and_grad: mask_loss without mask");

    double denom;
    if (mask_loss) {
        double observed = 0.0;
        for (double m : mask->v) observed += m;
        if (observed == 0.0) throw DataError("simple_loss_and_grad: no observed elements");
        denom = observed;
    } else {
        denom = static_cast<double>(eps.v.size());
    }

    Tensor3 grad(eps.b, eps.t, eps.d);
    double acc = 0.0;
    for (size_t i = 0; i < eps.v.size(); ++i) {
        const double w = mask_loss ? mask->v[i] : 1.0;
        const double d = eps_pred.v[i] - eps.v[i];
        acc += w * d * d;
        grad.v[i] = 2.0 * w * d / denom;
    }
    return {acc / denom, std::move(grad)};
}

Tensor3 p_sample_step(const Tensor3& xt, int t, const Tensor3& eps_pred,
                      const NoiseSchedule& sched, Rng& rng, const Tensor3* z_override) {
    if (!xt.same_shape(eps_pred)) throw DimensionError("p_sample_step: eps_pred shape mismatch");
    const double alpha = sched.alpha_at(t);  // validates t range
    const double beta = sched.beta_at(t);
    const double ab = sched.alpha_bar_at(t);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
    const double noise_coef = beta / std::sqrt(1.0 - ab);
    const double sigma = sched.sigma_at(t);

    Tensor3 out(xt.b, xt.t, xt.d);
    for (size_t i = 0; i < xt.v.size(); ++i) {
        out.v[i] = inv_sqrt_alpha * (xt.v[i] - noise_coef * eps_pred.v[i]);
    }
    if (t > 1 && sigma > 0.0) {
        if (z_override) {
            if (!z_override->same_shape(xt)) {
                throw DimensionError("p_sample_step: z_override shape mismatch");
            }
            for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += sigma * z_override->v[i];
        } else {
            for (double& o : out.v) o += sigma * rng.normal();
        }
    }
    return out;
}

Tensor3 sample_loop(const EpsFn& eps_fn, const NoiseSchedule& sched, int n, int t_seq, int d,
                    Rng& rng, int check_every) {
    if (n < 0) throw ParameterError("sample_loop: n must be nonnegative");
    if (n == 0) return Tensor3();  // empty batch
    const uint64_t stream_base = rng.next_u64();

    // One noise stream per sequence: the initial x_T followed by the z draw
    // of every reverse step with t > 1.
    std::vector<Rng> streams;
    streams.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) streams.emplace_back(mix_seed(stream_base, static_cast<uint64_t>(i)));

    Tensor3 x(n, t_seq, d);
    const size_t per_item = static_cast<size_t>(t_seq) * d;
    for (int i = 0; i < n; ++i) {
        double* p = &x.v[static_cast<size_t>(i) * per_item];
        for (size_t j = 0; j < per_item; ++j) p[j] = streams[static_cast<size_t>(i)].normal();
    }

    Tensor3 z(n, t_seq, d);
    for (int t = sched.steps; t >= 1; --t) {
        const Tensor3 eps_pred = eps_fn(x, t);
        if (t > 1) {
            for (int i = 0; i < n; ++i) {
                double* p = &z.v[static_cast<size_t>(i) * per_item];
                for (size_t j = 0; j < per_item; ++j) p[j] = streams[static_cast<size_t>(i)].normal();
            }
            x = p_sample_step(x, t, eps_pred, sched, rng, &z);
        } else {
            x = p_sample_step(x, t, eps_pred, sched, rng, nullptr);
        }
        if (check_every > 0 && (t % check_every == 0 || t == 1)) {
            ensure_finite(x.v.data(), x.v.size(), "sample_loop");
        }
    }
    return x;
}

}  // namespace tempodiff
