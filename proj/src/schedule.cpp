#include "adir/schedule.hpp"

#include <cmath>

namespace adir {

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "linear") return ScheduleKind::Linear;
    if (s == "terminal-one") return ScheduleKind::TerminalOne;
    throw ParameterError("unknown schedule kind '" + s + "' (expected linear or terminal-one)");
}

std::string to_string(ScheduleKind k) {
    return k == ScheduleKind::Linear ? "linear" : "terminal-one";
}

DiffusionSchedule make_schedule(int T, ScheduleKind kind, double beta_start, double beta_end) {
    if (T < 1) throw ParameterError("schedule needs T >= 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end <= 1.0))
        throw ParameterError("need 0 < beta_start <= beta_end <= 1");

    DiffusionSchedule s;
    s.T = T;
    s.kind = kind;
    s.beta_start = beta_start;
    s.beta_end = beta_end;
    s.betas.resize(T);
    s.alphas.resize(T);
    s.alpha_bars.resize(T);
    s.posterior_vars.resize(T);

    const double last = kind == ScheduleKind::TerminalOne ? 1.0 : beta_end;
    for (int t = 1; t <= T; ++t) {
        double b = T == 1 ? (kind == ScheduleKind::TerminalOne ? 1.0 : beta_start)
                          : beta_start + (last - beta_start) * double(t - 1) / double(T - 1);
        if (t == T && kind == ScheduleKind::TerminalOne) b = 1.0;
        s.betas[t - 1] = b;
        s.alphas[t - 1] = 1.0 - b;
    }

    // Plain double cumulative product: the stored recurrence
    // alpha_bar_t = alpha_bar_{t-1} * alpha_t then holds bit-exactly.
    double abar = 1.0;
    for (int t = 1; t <= T; ++t) {
        abar *= s.alphas[t - 1];
        s.alpha_bars[t - 1] = abar;
    }

    for (int t = 1; t <= T; ++t) {
        if (t == 1) {
            s.posterior_vars[0] = s.betas[0];
        } else {
            double num = 1.0 - s.alpha_bars[t - 2];
            double den = 1.0 - s.alpha_bars[t - 1];
            s.posterior_vars[t - 1] = num / den * s.betas[t - 1];
        }
    }
    return s;
}

ImageTensor forward_sample(const ImageTensor& x0, int t, const NoiseDraw& eps, const DiffusionSchedule& sched) {
    if (t < 0 || t > sched.T) throw ParameterError("forward_sample: t outside 0..T");
    require_same_shape(x0, eps.values, "forward_sample");
    double abar = sched.alpha_bar(t);
    return lin_comb(std::sqrt(abar), x0, std::sqrt(1.0 - abar), eps.values);
}

ImageTensor posterior_mean(const ImageTensor& x_t, const ImageTensor& eps_hat, int t, const DiffusionSchedule& sched) {
    sched.check_step(t);
    require_same_shape(x_t, eps_hat, "posterior_mean");
    double abar = sched.alpha_bar(t);
    double alpha = sched.alpha(t);
    if (1.0 - abar == 0.0) throw DegenerateStepError("posterior_mean at t with alpha_bar = 1");
    if (alpha <= 0.0) throw DegenerateStepError("posterior_mean at t with alpha_t = 0 (terminal-one endpoint)");
    double coeff = (1.0 - alpha) / std::sqrt(1.0 - abar);
    double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
    return lin_comb(inv_sqrt_alpha, x_t, -coeff * inv_sqrt_alpha, eps_hat);
}

ImageTensor estimate_x0(const ImageTensor& x_t, const ImageTensor& eps_hat, int t, const DiffusionSchedule& sched) {
    sched.check_step(t);
    require_same_shape(x_t, eps_hat, "estimate_x0");
    double abar = sched.alpha_bar(t);
    if (abar <= 0.0) throw DegenerateStepError("estimate_x0 at t with alpha_bar = 0");
    double inv = 1.0 / std::sqrt(abar);
    return lin_comb(inv, x_t, -std::sqrt(1.0 - abar) * inv, eps_hat);
}

double simple_loss(const NoiseDraw& eps, const ImageTensor& eps_pred) {
    return sq_dist(eps.values, eps_pred);
}

ImageTensor ancestral_step(const ImageTensor& mean, double var_t, RandomStream& rng) {
    if (var_t < 0.0) throw ParameterError("ancestral_step: negative variance");
    if (var_t == 0.0) return mean;
    ImageTensor out = mean;
    double sd = std::sqrt(var_t);
    for (double& v : out.data) v += sd * rng.normal();
    return out;
}

} // namespace adir
