#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "tempodiff/nn.hpp"

namespace tempodiff {

// Precomputed noise schedule. Index 1..T via the accessors; alpha_bar(0) is
// defined as 1 so the step-1 posterior variance is exactly zero.
struct NoiseSchedule {
    int steps = 0;
    double s = 0.008;
    double beta_clip = 0.999;
    std::vector<double> beta;       // [T]
    std::vector<double> alpha;      // [T]
    std::vector<double> alpha_bar;  // [T], cumulative product of alpha
    std::vector<double> sigma;      // [T], posterior std dev, sigma(1) = 0

    double beta_at(int t) const { return beta[check(t)]; }
    double alpha_at(int t) const { return alpha[check(t)]; }
    double alpha_bar_at(int t) const { return t == 0 ? 1.0 : alpha_bar[check(t)]; }
    double sigma_at(int t) const { return sigma[check(t)]; }

private:
    size_t check(int t) const {
        if (t < 1 || t > steps) {
            throw IndexError("NoiseSchedule: step " + std::to_string(t) + " out of [1, " +
                             std::to_string(steps) + "]");
        }
        return static_cast<size_t>(t - 1);
    }
};

// f(t) = cos^2(((t/T + s)/(1 + s)) * pi/2); alpha_bar from f(t)/f(0) with the
// per-step beta clipped at beta_clip and alpha_bar rebuilt as a cumulative
// product so the table stays self-consistent where clipping bites.
NoiseSchedule cosine_beta_schedule(int steps, double s = 0.008, double beta_clip = 0.999);

// Forward noising: xt = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps with
// eps ~ N(0, I), one t per batch item.
struct QSampleResult {
    Tensor3 xt;
    Tensor3 eps;
};
QSampleResult q_sample(const Tensor3& x0, const std::vector<int>& t, const NoiseSchedule& sched,
                       Rng& rng);
// Deterministic variant used by tests and the training loop.
Tensor3 q_sample_with_eps(const Tensor3& x0, const std::vector<int>& t,
                          const NoiseSchedule& sched, const Tensor3& eps);

// Mean squared difference over all B*T*D elements.
double simple_loss(const Tensor3& eps, const Tensor3& eps_pred);
// Loss plus d(loss)/d(eps_pred). When mask_loss is set the mean runs over
// observed elements only (mask entries equal to 1).
std::pair<double, Tensor3> simple_loss_and_grad(const Tensor3& eps, const Tensor3& eps_pred,
                                                const Tensor3* mask, bool mask_loss);

// One ancestral reverse step; the t = 1 step adds no noise. z_override, when
// given, replaces the N(0, I) draw (tests and per-sequence noise streams).
Tensor3 p_sample_step(const Tensor3& xt, int t, const Tensor3& eps_pred,
                      const NoiseSchedule& sched, Rng& rng, const Tensor3* z_override = nullptr);

// Noise predictor interface for the sampling loop: (xt, t) -> eps_pred.
using EpsFn = std::function<Tensor3(const Tensor3&, int)>;

// Full ancestral loop from x_T ~ N(0, I) down to x_0 for n sequences of shape
// (t_seq, d). Per-sequence noise streams are derived from rng so the result
// is independent of batch chunking. Every check_every steps the state is
// checked for NaN/Inf.
Tensor3 sample_loop(const EpsFn& eps_fn, const NoiseSchedule& sched, int n, int t_seq, int d,
                    Rng& rng, int check_every = 100);

}  // namespace tempodiff
