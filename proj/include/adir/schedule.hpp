#pragma once

#include <string>
#include <vector>

#include "adir/rng.hpp"
#include "adir/tensor.hpp"

namespace adir {

enum class ScheduleKind { Linear, TerminalOne };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);

// Variance schedule and derived per-step quantities. Sequences are stored for
// t = 1..T at index t-1; alpha_bar(0) == 1 by convention.
struct DiffusionSchedule {
    int T = 0;
    ScheduleKind kind = ScheduleKind::Linear;
    double beta_start = 0.0;
    double beta_end = 0.0;
    std::vector<double> betas;
    std::vector<double> alphas;
    std::vector<double> alpha_bars;
    std::vector<double> posterior_vars; // beta_tilde_t, with beta_tilde_1 = beta_1

    double beta(int t) const { return betas[t - 1]; }
    double alpha(int t) const { return alphas[t - 1]; }
    double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bars[t - 1]; }
    double posterior_var(int t) const { return posterior_vars[t - 1]; }

    void check_step(int t) const {
        if (t < 1 || t > T) throw ParameterError("step index " + std::to_string(t) + " outside 1.." + std::to_string(T));
    }
};

// kind=linear interpolates beta_start..beta_end; kind=terminal-one interpolates
// beta_start..1 with beta_T = 1 exactly (so alpha_bar(T) = 0).
DiffusionSchedule make_schedule(int T, ScheduleKind kind, double beta_start, double beta_end);

// x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) eps. t=0 is accepted and returns x0.
ImageTensor forward_sample(const ImageTensor& x0, int t, const NoiseDraw& eps, const DiffusionSchedule& sched);

// mu = (x_t - (1-alpha_t)/sqrt(1-abar_t) * eps_hat) / sqrt(alpha_t)
ImageTensor posterior_mean(const ImageTensor& x_t, const ImageTensor& eps_hat, int t, const DiffusionSchedule& sched);

// x0_hat = (x_t - sqrt(1-abar_t) * eps_hat) / sqrt(abar_t); requires abar_t > 0
ImageTensor estimate_x0(const ImageTensor& x_t, const ImageTensor& eps_hat, int t, const DiffusionSchedule& sched);

// squared L2 norm of (eps - eps_pred), summed over all entries
double simple_loss(const NoiseDraw& eps, const ImageTensor& eps_pred);

// mean + sqrt(var_t) * z. var_t == 0 returns mean exactly and draws nothing.
ImageTensor ancestral_step(const ImageTensor& mean, double var_t, RandomStream& rng);

} // namespace adir
