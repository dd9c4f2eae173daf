#pragma once

#include "meanstab/common.hpp"
#include "meanstab/procmodels.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace meanstab {

/// Seed of path `path_index` under master seed `master_seed`. Paths draw from
/// independent engines seeded this way, so ensembles are reproducible under
/// any execution order.
std::uint64_t mc_path_seed(std::uint64_t master_seed, std::uint64_t path_index);

/// One realized switching signal. Events record label changes only: the first
/// entry is (0, initial label) and event times increase strictly.
struct SamplePath {
    std::vector<std::pair<double, std::string>> events;
    double horizon = 0.0;
    std::uint64_t seed = 0;

    const std::string& mode_at(double t) const;
};

/// Draws one switching signal. The initial state is uniform over the model's
/// embedded states unless `initial_state` pins it (0-based). Deterministic in
/// (model, horizon, seed, initial_state).
SamplePath sample_switching(const SwitchedSystemModel& model, double horizon,
                            std::uint64_t seed,
                            std::optional<int> initial_state = std::nullopt);

/// States at the grid instants by exact piecewise propagation: within each
/// constant-mode segment the state advances by that segment's matrix
/// exponential. The grid must be nondecreasing and lie within [0, horizon].
std::vector<Vector> propagate_state(const SamplePath& path, const ModeSet& modes,
                                    const Vector& x0, const std::vector<double>& time_grid);

struct MomentOptions {
    int path_count = 100;
    double horizon = 10.0;
    double grid_step = 0.01;
    std::uint64_t seed = 0;
    /// Fixed initial state vector; must be nonzero. Default: a fresh uniform
    /// draw from the unit sphere per path.
    std::optional<Vector> x0;
    /// Fixed initial embedded state (0-based). Default: uniform per path.
    std::optional<int> initial_state;
    bool keep_path_norms = false;
    int threads = 0;  // 0 picks the hardware concurrency
};

/// Ensemble moment estimate. log_moment_mean is always finite and is the
/// quantity the growth fit uses; moment_mean = exp(log_moment_mean) saturates
/// to +inf when the estimate exceeds the double range, with the first such
/// grid instant recorded in saturation_time.
struct TrajectoryEnsemble {
    std::vector<double> time_grid;
    std::vector<double> moment_mean;
    std::vector<double> log_moment_mean;
    int path_count = 0;
    int m = 0;
    /// One row per path of ‖x(t)‖^m over the grid; filled on request.
    std::vector<std::vector<double>> per_path_norms;
    /// Least-squares slope of log moment_mean over the second half of the
    /// grid (per unit time).
    double empirical_growth_rate = 0.0;
    bool saturated = false;
    double saturation_time = 0.0;
};

/// Estimates E[‖x(t)‖^m] over a uniform grid from independent sample paths.
/// Norms are tracked in log space per path, so unstable regimes saturate the
/// reported mean instead of overflowing the computation. Output is
/// bit-identical for fixed (model, m, options) regardless of thread count.
TrajectoryEnsemble estimate_moments(const SwitchedSystemModel& model, int m,
                                    const MomentOptions& options);

struct LiftPropagationOptions {
    int path_count = 1000;
    int steps = 1;
    std::uint64_t seed = 0;
    std::optional<Vector> x0;          // default: uniform on the unit sphere per path
    std::optional<int> initial_state;  // default: uniform per path
    /// Regeneration interval for mjls models (required there); optional
    /// override of the model's own sampling period for periodic models.
    std::optional<double> sampling_period;
    int threads = 0;
};

/// Monte Carlo estimate of the lifted moment vectors E[e_{θ_k} ⊗ x_k^[m]] at
/// regeneration indices k = 0..steps. Block θ of each vector holds the
/// m-lift of the state, so one step advances the estimate by the class's
/// stability matrix.
struct LiftMomentEstimate {
    std::vector<Vector> mean;       // steps+1 vectors, dimension N·n_m
    std::vector<Vector> std_error;  // per-component standard error of the mean
    int path_count = 0;
};

LiftMomentEstimate empirical_lift_propagation(const SwitchedSystemModel& model, int m,
                                              const LiftPropagationOptions& options);

/// `t,moment_mean` per grid instant.
void write_moments_csv(std::ostream& out, const TrajectoryEnsemble& ensemble);
/// `t,path_id,norm_m`, grid-major; needs per-path retention.
void write_paths_csv(std::ostream& out, const TrajectoryEnsemble& ensemble);
/// `time,mode` per event; labels containing separators are quoted.
void write_switching_csv(std::ostream& out, const SamplePath& path);

}  // namespace meanstab
