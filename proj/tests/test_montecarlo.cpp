#include <doctest.h>

#include "meanstab/mlift.hpp"
#include "meanstab/montecarlo.hpp"
#include "meanstab/numkernel.hpp"
#include "meanstab/procmodels.hpp"
#include "meanstab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

using namespace meanstab;

namespace {

std::string models_dir() { return MEANSTAB_MODELS_DIR; }

const char* kAlternatingDoc = R"({
  "version": 1,
  "m": 2,
  "class": "semi_markov",
  "modes": [
    {"label": "a", "matrix": [[-0.5, 1.0], [0.0, -1.0]]},
    {"label": "b", "matrix": [[0.1, 0.0], [0.4, -0.9]]}
  ],
  "kernel": {
    "P": [[0.0, 1.0], [1.0, 0.0]],
    "holding": [
      {"from": 1, "to": 2, "dist": {"type": "deterministic", "value": 0.5}},
      {"from": 2, "to": 1, "dist": {"type": "deterministic", "value": 0.5}}
    ]
  }
})";

const char* kSingleModeDoc = R"({
  "version": 1,
  "m": 2,
  "class": "mjls",
  "modes": [{"label": "only", "matrix": [[-0.5, 0.2], [0.0, -0.8]]}],
  "generator": [[0.0]]
})";

const char* kTwoStateMjlsDoc = R"({
  "version": 1,
  "m": 2,
  "class": "mjls",
  "modes": [
    {"label": "a", "matrix": [[-0.3]]},
    {"label": "b", "matrix": [[0.2]]}
  ],
  "generator": [[-1.0, 1.0], [0.8, -0.8]]
})";

bool strictly_increasing_events(const SamplePath& path) {
    for (size_t k = 1; k < path.events.size(); ++k)
        if (path.events[k].first <= path.events[k - 1].first) return false;
    return true;
}

}  // namespace

TEST_CASE("path seeds separate master seeds and path indices") {
    CHECK(mc_path_seed(0, 0) != mc_path_seed(0, 1));
    CHECK(mc_path_seed(0, 0) != mc_path_seed(1, 0));
    CHECK(mc_path_seed(7, 3) == mc_path_seed(7, 3));
}

TEST_CASE("sampling is deterministic in model, horizon, and seed") {
    const SwitchedSystemModel model = parse_model(kTwoStateMjlsDoc);
    const SamplePath p1 = sample_switching(model, 25.0, 99);
    const SamplePath p2 = sample_switching(model, 25.0, 99);
    CHECK(p1.events == p2.events);
    const SamplePath p3 = sample_switching(model, 25.0, 100);
    CHECK(p1.events != p3.events);
    CHECK(p1.seed == 99);
    CHECK(p1.horizon == 25.0);
    CHECK(strictly_increasing_events(p1));
    REQUIRE_FALSE(p1.events.empty());
    CHECK(p1.events[0].first == 0.0);
}

TEST_CASE("single-state chain yields a constant path") {
    const SwitchedSystemModel model = parse_model(kSingleModeDoc);
    const SamplePath path = sample_switching(model, 10.0, 1);
    REQUIRE(path.events.size() == 1);
    CHECK(path.events[0] == std::pair<double, std::string>{0.0, "only"});
    CHECK(path.mode_at(0.0) == "only");
    CHECK(path.mode_at(9.99) == "only");
}

TEST_CASE("an absorbing generator row holds the state forever") {
    const SwitchedSystemModel model = parse_model(R"({
      "version": 1, "m": 2, "class": "mjls",
      "modes": [
        {"label": "sink", "matrix": [[-1.0]]},
        {"label": "source", "matrix": [[0.5]]}
      ],
      "generator": [[0.0, 0.0], [2.0, -2.0]]
    })");
    const SamplePath path = sample_switching(model, 50.0, 5, 1);
    REQUIRE(path.events.size() == 2);
    CHECK(path.events[0].second == "source");
    CHECK(path.events[1].second == "sink");
    CHECK(path.mode_at(50.0) == "sink");
}

TEST_CASE("deterministic holdings jump on the exact lattice") {
    const SwitchedSystemModel model = parse_model(kAlternatingDoc);
    const SamplePath path = sample_switching(model, 5.0, 3, 0);
    REQUIRE(path.events.size() == 10);
    for (size_t k = 0; k < path.events.size(); ++k) {
        CHECK(path.events[k].first == 0.5 * static_cast<double>(k));
        CHECK(path.events[k].second == (k % 2 == 0 ? "a" : "b"));
    }
}

TEST_CASE("periodic paths switch the gain only on the sampling lattice") {
    const SwitchedSystemModel model = parse_model_file(models_dir() + "/economy_periodic.json");
    const double h = model.periodic->sampling_period;
    const SamplePath path = sample_switching(model, 50.0, 11);
    CHECK(strictly_increasing_events(path));
    for (size_t k = 1; k < path.events.size(); ++k) {
        const auto prev = parse_closed_loop_label(path.events[k - 1].second);
        const auto cur = parse_closed_loop_label(path.events[k].second);
        if (cur.second != prev.second) {
            const double t = path.events[k].first;
            const double nearest = std::round(t / h) * h;
            CHECK(std::abs(t - nearest) <= 1e-9);
        }
    }
}

TEST_CASE("sampled plant-mode transitions follow the generator exponential") {
    const SwitchedSystemModel model = parse_model_file(models_dir() + "/economy_periodic.json");
    const double h = model.periodic->sampling_period;
    const int steps = 100000;
    const SamplePath path = sample_switching(model, h * (steps + 1), 2024);

    const Matrix oracle = expm(model.periodic->generator.Q * h);
    Matrix counts = Matrix::Zero(3, 3);
    int prev = parse_closed_loop_label(path.mode_at(0.0)).first - 1;
    for (int k = 1; k <= steps; ++k) {
        const int cur = parse_closed_loop_label(path.mode_at(k * h)).first - 1;
        counts(prev, cur) += 1.0;
        prev = cur;
    }
    for (int i = 0; i < 3; ++i) {
        const double row = counts.row(i).sum();
        REQUIRE(row > 0.0);
        for (int j = 0; j < 3; ++j) {
            const double phat = counts(i, j) / row;
            const double p = oracle(i, j);
            const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / row);
            CHECK(std::abs(phat - p) <= 3.0 * se + 1e-9);
        }
    }
}

TEST_CASE("single-mode propagation is the matrix exponential flow") {
    const SwitchedSystemModel model = parse_model(kSingleModeDoc);
    const SamplePath path = sample_switching(model, 5.0, 1);
    Vector x0(2);
    x0 << 1.0, -2.0;
    const std::vector<double> grid{0.0, 0.5, 1.25, 5.0};
    const std::vector<Vector> states = propagate_state(path, model.modes, x0, grid);
    REQUIRE(states.size() == 4);
    const Matrix& a = model.modes.matrix("only");
    for (size_t g = 0; g < grid.size(); ++g) {
        const Vector want = expm(a * grid[g]) * x0;
        CHECK((states[g] - want).norm() <= 1e-12 * std::max(1.0, want.norm()));
    }
}

TEST_CASE("zero initial state stays identically zero") {
    const SwitchedSystemModel model = parse_model(kAlternatingDoc);
    const SamplePath path = sample_switching(model, 5.0, 2);
    const std::vector<Vector> states =
        propagate_state(path, model.modes, Vector::Zero(2), {0.0, 1.0, 4.9});
    for (const Vector& x : states) CHECK(x.norm() == 0.0);
}

TEST_CASE("piecewise propagation matches a fine runge-kutta integration") {
    const SwitchedSystemModel model = parse_model(kAlternatingDoc);
    const SamplePath path = sample_switching(model, 2.0, 4);
    Vector x0(2);
    x0 << 0.7, -0.4;
    const std::vector<double> grid{2.0};
    const Vector got = propagate_state(path, model.modes, x0, grid)[0];

    Vector x = x0;
    const int steps = 400000;
    const double dt = 2.0 / steps;
    for (int s = 0; s < steps; ++s) {
        const double t = s * dt;
        const Matrix& a = model.modes.matrix(path.mode_at(t));
        const Vector k1 = a * x;
        const Vector k2 = a * (x + 0.5 * dt * k1);
        const Vector k3 = a * (x + 0.5 * dt * k2);
        const Vector k4 = a * (x + dt * k3);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    CHECK((got - x).norm() <= 1e-6 * std::max(1.0, x.norm()));
}

TEST_CASE("propagation rejects unknown labels and stray grids") {
    const SwitchedSystemModel model = parse_model(kSingleModeDoc);
    SamplePath path = sample_switching(model, 5.0, 1);
    Vector x0(2);
    x0 << 1.0, 0.0;
    CHECK_THROWS_AS(propagate_state(path, model.modes, x0, {0.0, 6.0}), ValidationError);
    CHECK_THROWS_AS(propagate_state(path, model.modes, x0, {1.0, 0.5}), ValidationError);
    path.events[0].second = "phantom";
    CHECK_THROWS_AS(propagate_state(path, model.modes, x0, {1.0}), ValidationError);
}

TEST_CASE("deterministic initial states pin the first moment exactly") {
    const SwitchedSystemModel model = parse_model(kSingleModeDoc);
    MomentOptions options;
    options.path_count = 8;
    options.horizon = 1.0;
    options.grid_step = 0.25;
    Vector x0(2);
    x0 << 2.0, 0.0;
    options.x0 = x0;
    const TrajectoryEnsemble ensemble = estimate_moments(model, 2, options);
    REQUIRE(ensemble.time_grid.size() == 5);
    CHECK(ensemble.moment_mean[0] == 4.0);
    for (double v : ensemble.moment_mean) CHECK(v >= 0.0);
    CHECK(ensemble.m == 2);
    CHECK(ensemble.path_count == 8);
}

TEST_CASE("single stable mode decays at the lifted rate") {
    const SwitchedSystemModel model = parse_model(kSingleModeDoc);
    MomentOptions options;
    options.path_count = 20;
    options.horizon = 10.0;
    options.grid_step = 0.01;
    Vector x0(2);
    x0 << 1.0, 1.0;
    options.x0 = x0;
    const TrajectoryEnsemble ensemble = estimate_moments(model, 2, options);
    // spectral abscissa of the mode is -0.5, so the squared norm decays at -1.0
    CHECK(ensemble.empirical_growth_rate == doctest::Approx(-1.0).epsilon(0.10));
    CHECK_FALSE(ensemble.saturated);
}

TEST_CASE("bundled model decays at the short period and grows at the long one") {
    const SwitchedSystemModel model = parse_model_file(models_dir() + "/economy_periodic.json");
    MomentOptions options;
    options.path_count = 80;
    options.horizon = 5.0;
    options.seed = 14;

    const TrajectoryEnsemble stable = estimate_moments(model, 2, options);
    CHECK(stable.moment_mean.back() < stable.moment_mean.front());

    SwitchedSystemModel faster = model;
    faster.periodic->sampling_period = 0.3;
    faster.validate();
    options.horizon = 2.5;
    const TrajectoryEnsemble unstable = estimate_moments(faster, 2, options);
    CHECK(unstable.moment_mean.back() > unstable.moment_mean.front());
    CHECK(unstable.empirical_growth_rate > 0.0);
}

TEST_CASE("moment estimation is bit-identical across thread counts") {
    const SwitchedSystemModel model = parse_model_file(models_dir() + "/economy_periodic.json");
    MomentOptions options;
    options.path_count = 48;
    options.horizon = 2.0;
    options.grid_step = 0.05;
    options.seed = 31;
    options.keep_path_norms = true;

    options.threads = 1;
    const TrajectoryEnsemble serial = estimate_moments(model, 2, options);
    options.threads = 4;
    const TrajectoryEnsemble quad = estimate_moments(model, 2, options);
    options.threads = 8;
    const TrajectoryEnsemble oct = estimate_moments(model, 2, options);

    CHECK(serial.moment_mean == quad.moment_mean);
    CHECK(serial.moment_mean == oct.moment_mean);
    CHECK(serial.log_moment_mean == quad.log_moment_mean);
    CHECK(serial.per_path_norms == quad.per_path_norms);
    CHECK(serial.empirical_growth_rate == quad.empirical_growth_rate);
}

TEST_CASE("per-path norms reproduce the exact propagation of each seed") {
    const SwitchedSystemModel model = parse_model(kAlternatingDoc);
    MomentOptions options;
    options.path_count = 6;
    options.horizon = 3.0;
    options.grid_step = 0.5;
    options.seed = 77;
    options.initial_state = 1;
    Vector x0(2);
    x0 << 0.8, -0.3;
    options.x0 = x0;
    options.keep_path_norms = true;
    const TrajectoryEnsemble ensemble = estimate_moments(model, 2, options);
    REQUIRE(ensemble.per_path_norms.size() == 6);

    std::vector<double> grid;
    for (size_t g = 0; g < ensemble.time_grid.size(); ++g) grid.push_back(ensemble.time_grid[g]);
    for (int k = 0; k < 6; ++k) {
        const SamplePath path =
            sample_switching(model, options.horizon, mc_path_seed(options.seed, k), 1);
        const std::vector<Vector> states = propagate_state(path, model.modes, x0, grid);
        for (size_t g = 0; g < grid.size(); ++g) {
            const double direct = std::pow(states[g].norm(), 2);
            const double kept = ensemble.per_path_norms[static_cast<size_t>(k)][g];
            CHECK(std::abs(kept - direct) <= 1e-10 * std::max(1.0, direct));
            // the lifted state has the same norm as the squared norm of the state
            const double lifted = lift_vector(states[g], 2).norm();
            CHECK(std::abs(lifted - direct) <= 1e-10 * std::max(1.0, direct));
        }
    }
}

TEST_CASE("unstable systems saturate the reported mean instead of overflowing") {
    const SwitchedSystemModel model = parse_model(R"({
      "version": 1, "m": 2, "class": "mjls",
      "modes": [{"label": "hot", "matrix": [[200.0]]}],
      "generator": [[0.0]]
    })");
    MomentOptions options;
    options.path_count = 4;
    options.horizon = 4.0;
    options.grid_step = 0.1;
    Vector x0(1);
    x0 << 1.0;
    options.x0 = x0;
    const TrajectoryEnsemble ensemble = estimate_moments(model, 2, options);
    CHECK(ensemble.saturated);
    CHECK(ensemble.saturation_time > 0.0);
    CHECK(std::isinf(ensemble.moment_mean.back()));
    CHECK(std::isfinite(ensemble.log_moment_mean.back()));
    CHECK(ensemble.empirical_growth_rate == doctest::Approx(400.0).epsilon(0.05));
}

TEST_CASE("metzler modes with nonnegative starts keep states nonnegative") {
    const SwitchedSystemModel model = parse_model(R"({
      "version": 1, "m": 2, "class": "semi_markov",
      "modes": [
        {"label": "a", "matrix": [[-1.0, 0.7], [0.2, -0.5]]},
        {"label": "b", "matrix": [[-0.2, 0.1], [0.9, -1.5]]}
      ],
      "kernel": {
        "P": [[0.3, 0.7], [0.6, 0.4]],
        "holding": [
          {"from": 1, "to": 1, "dist": {"type": "uniform", "lo": 0.2, "hi": 0.8}},
          {"from": 1, "to": 2, "dist": {"type": "deterministic", "value": 0.4}},
          {"from": 2, "to": 1, "dist": {"type": "discrete_finite", "atoms": [[0.3, 0.5], [0.9, 0.5]]}},
          {"from": 2, "to": 2, "dist": {"type": "truncated_exponential", "rate": 2.0, "cap": 3.0}}
        ]
      }
    })");
    CHECK(model.modes.all_metzler());
    Vector x0(2);
    x0 << 1.0, 0.5;
    std::vector<double> grid;
    for (int g = 0; g <= 60; ++g) grid.push_back(0.1 * g);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const SamplePath path = sample_switching(model, 6.0, seed);
        for (const Vector& x : propagate_state(path, model.modes, x0, grid))
            CHECK(x.minCoeff() >= -1e-12);
    }
}

TEST_CASE("lifted moment estimate at step zero is the exact lifted start") {
    const SwitchedSystemModel model = parse_model(kAlternatingDoc);
    LiftPropagationOptions options;
    options.path_count = 1000;
    options.steps = 0;
    options.initial_state = 1;
    Vector x0(2);
    x0 << 0.5, 0.0;
    options.x0 = x0;
    const LiftMomentEstimate estimate = empirical_lift_propagation(model, 2, options);
    REQUIRE(estimate.mean.size() == 1);
    REQUIRE(estimate.mean[0].size() == 6);
    Vector want = Vector::Zero(6);
    want(3) = 0.25;  // block of state 1 starts at the lift of (0.5, 0)
    CHECK((estimate.mean[0] - want).norm() == 0.0);
    CHECK(estimate.std_error[0].maxCoeff() == 0.0);
}

TEST_CASE("one lifted step agrees with the stability matrix action") {
    const SwitchedSystemModel model = parse_model(R"({
      "version": 1, "m": 2, "class": "semi_markov",
      "modes": [
        {"label": "a", "matrix": [[-0.4, 0.6], [0.0, -0.2]]},
        {"label": "b", "matrix": [[0.3, 0.0], [-0.5, -0.6]]}
      ],
      "kernel": {
        "P": [[0.25, 0.75], [0.5, 0.5]],
        "holding": [
          {"from": 1, "to": 1, "dist": {"type": "discrete_finite", "atoms": [[0.4, 0.5], [1.2, 0.5]]}},
          {"from": 1, "to": 2, "dist": {"type": "discrete_finite", "atoms": [[0.7, 1.0]]}},
          {"from": 2, "to": 1, "dist": {"type": "discrete_finite", "atoms": [[0.5, 0.25], [1.0, 0.75]]}},
          {"from": 2, "to": 2, "dist": {"type": "discrete_finite", "atoms": [[0.9, 1.0]]}}
        ]
      }
    })");
    LiftPropagationOptions options;
    options.path_count = 30000;
    options.steps = 1;
    options.seed = 6;
    options.initial_state = 0;
    Vector x0(2);
    x0 << 1.0, -0.5;
    options.x0 = x0;
    const LiftMomentEstimate estimate = empirical_lift_propagation(model, 2, options);

    const StabilityReport report = analyze(model);
    Vector v0 = Vector::Zero(6);
    v0.segment(0, 3) = lift_vector(x0, 2);
    const Vector want = report.matrix * v0;
    REQUIRE(estimate.mean.size() == 2);
    for (int c = 0; c < 6; ++c) {
        CHECK(std::abs(estimate.mean[1](c) - want(c)) <=
              3.0 * estimate.std_error[1](c) + 1e-9);
    }
}

TEST_CASE("sampled mjls steps agree with the exponential of the coupled matrix") {
    const SwitchedSystemModel model = parse_model(kTwoStateMjlsDoc);
    const double h = 0.4;
    LiftPropagationOptions options;
    options.path_count = 20000;
    options.steps = 2;
    options.seed = 12;
    options.initial_state = 0;
    options.sampling_period = h;
    Vector x0(1);
    x0 << 1.0;
    options.x0 = x0;
    const LiftMomentEstimate estimate = empirical_lift_propagation(model, 2, options);

    const StabilityReport report = analyze(model);  // Hurwitz matrix of the coupled lifts
    Vector v0 = Vector::Zero(2);
    v0(0) = 1.0;
    for (int k = 1; k <= 2; ++k) {
        const Vector want = expm(report.matrix * (h * k)) * v0;
        for (int c = 0; c < 2; ++c) {
            CHECK(std::abs(estimate.mean[static_cast<size_t>(k)](c) - want(c)) <=
                  3.0 * estimate.std_error[static_cast<size_t>(k)](c) + 1e-9);
        }
    }
}

TEST_CASE("lifted propagation is bit-identical across thread counts") {
    const SwitchedSystemModel model = parse_model(kAlternatingDoc);
    LiftPropagationOptions options;
    options.path_count = 2000;
    options.steps = 3;
    options.seed = 9;
    options.threads = 1;
    const LiftMomentEstimate serial = empirical_lift_propagation(model, 2, options);
    options.threads = 4;
    const LiftMomentEstimate quad = empirical_lift_propagation(model, 2, options);
    REQUIRE(serial.mean.size() == quad.mean.size());
    for (size_t k = 0; k < serial.mean.size(); ++k) {
        CHECK((serial.mean[k] - quad.mean[k]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((serial.std_error[k] - quad.std_error[k]).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("sampling-period plumbing is validated per class") {
    const SwitchedSystemModel mjls = parse_model(kTwoStateMjlsDoc);
    LiftPropagationOptions options;
    options.path_count = 10;
    CHECK_THROWS_AS(empirical_lift_propagation(mjls, 2, options), ValidationError);

    const SwitchedSystemModel semi = parse_model(kAlternatingDoc);
    options.sampling_period = 0.5;
    CHECK_THROWS_AS(empirical_lift_propagation(semi, 2, options), ValidationError);
}

TEST_CASE("csv writers emit the documented headers and quoting") {
    const SwitchedSystemModel model = parse_model(kSingleModeDoc);
    MomentOptions options;
    options.path_count = 2;
    options.horizon = 0.5;
    options.grid_step = 0.25;
    Vector x0(2);
    x0 << 1.0, 0.0;
    options.x0 = x0;
    const TrajectoryEnsemble plain = estimate_moments(model, 2, options);

    std::ostringstream moments;
    write_moments_csv(moments, plain);
    CHECK(moments.str().rfind("t,moment_mean\n0,1\n", 0) == 0);
    CHECK(moments.str().back() == '\n');

    std::ostringstream paths_fail;
    CHECK_THROWS_AS(write_paths_csv(paths_fail, plain), ValidationError);

    options.keep_path_norms = true;
    const TrajectoryEnsemble kept = estimate_moments(model, 2, options);
    std::ostringstream paths;
    write_paths_csv(paths, kept);
    CHECK(paths.str().rfind("t,path_id,norm_m\n0,0,1\n0,1,1\n", 0) == 0);

    SamplePath path;
    path.events = {{0.0, "plain"}, {0.5, "with,comma"}};
    path.horizon = 1.0;
    std::ostringstream switching;
    write_switching_csv(switching, path);
    CHECK(switching.str() == "time,mode\n0,plain\n0.5,\"with,comma\"\n");
}

TEST_CASE("option validation rejects unusable ensembles") {
    const SwitchedSystemModel model = parse_model(kSingleModeDoc);
    MomentOptions options;
    options.path_count = 0;
    CHECK_THROWS_AS(estimate_moments(model, 2, options), ValidationError);
    options.path_count = 2;
    options.horizon = -1.0;
    CHECK_THROWS_AS(estimate_moments(model, 2, options), ValidationError);
    options.horizon = 1.0;
    options.x0 = Vector::Zero(2);
    CHECK_THROWS_AS(estimate_moments(model, 2, options), ValidationError);
    Vector wrong(3);
    wrong << 1, 2, 3;
    options.x0 = wrong;
    CHECK_THROWS_AS(estimate_moments(model, 2, options), DimensionError);
    options.x0.reset();
    CHECK_THROWS_AS(estimate_moments(model, 0, options), ValidationError);
    CHECK_THROWS_AS(sample_switching(model, 0.0, 1), ValidationError);
}
