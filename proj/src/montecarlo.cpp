#include "meanstab/montecarlo.hpp"

#include "meanstab/mlift.hpp"
#include "meanstab/numkernel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <thread>

namespace meanstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Per-path random source. mt19937_64 has a fully specified output sequence,
/// and every sampler below is written out explicitly, so path streams are
/// reproducible across platforms and build settings.
class PathRng {
public:
    explicit PathRng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1); safe under log.
    double u01_pos() {
        double u = u01();
        while (u == 0.0) u = u01();
        return u;
    }

    double exponential(double rate) { return -std::log(u01_pos()) / rate; }

    int uniform_index(int count) {
        return std::min(count - 1, static_cast<int>(u01() * count));
    }

    /// Index j with probability weights[j]/total; zero weights never drawn.
    int discrete(const std::vector<double>& weights, double total) {
        const double r = u01() * total;
        double cum = 0.0;
        int last = 0;
        for (int j = 0; j < static_cast<int>(weights.size()); ++j) {
            if (weights[j] <= 0.0) continue;
            last = j;
            cum += weights[j];
            if (r < cum) return j;
        }
        return last;
    }

    double holding(const HoldingDistribution& h) {
        if (const auto* d = std::get_if<DeterministicHolding>(&h.dist)) return d->value;
        if (const auto* d = std::get_if<DiscreteFiniteHolding>(&h.dist)) {
            const double r = u01();
            double cum = 0.0;
            double last = d->atoms.back().first;
            for (const auto& [t, p] : d->atoms) {
                if (p <= 0.0) continue;
                last = t;
                cum += p;
                if (r < cum) return t;
            }
            return last;
        }
        if (const auto* d = std::get_if<UniformHolding>(&h.dist))
            return d->lo + (d->hi - d->lo) * u01_pos();
        const auto& d = std::get<TruncatedExponentialHolding>(h.dist);
        return -std::log1p(-u01_pos() * (1.0 - std::exp(-d.rate * d.cap))) / d.rate;
    }

    Vector unit_sphere(int n) {
        Vector g(n);
        while (true) {
            for (int i = 0; i < n; i += 2) {
                const double radius = std::sqrt(-2.0 * std::log(u01_pos()));
                const double angle = 2.0 * std::numbers::pi * u01();
                g(i) = radius * std::cos(angle);
                if (i + 1 < n) g(i + 1) = radius * std::sin(angle);
            }
            const double norm = g.norm();
            if (norm > 0.0 && std::isfinite(norm)) return g / norm;
        }
    }

private:
    std::mt19937_64 eng_;
};

int pick_initial(PathRng& rng, std::optional<int> initial_state, int count) {
    if (!initial_state) return rng.uniform_index(count);
    if (*initial_state < 0 || *initial_state >= count)
        throw ValidationError("initial state out of range");
    return *initial_state;
}

int ctmc_next(PathRng& rng, const Matrix& q, int i) {
    const int N = static_cast<int>(q.rows());
    std::vector<double> w(static_cast<std::size_t>(N), 0.0);
    double total = 0.0;
    for (int j = 0; j < N; ++j) {
        if (j != i && q(i, j) > 0.0) {
            w[static_cast<std::size_t>(j)] = q(i, j);
            total += q(i, j);
        }
    }
    return rng.discrete(w, total);
}

SamplePath sample_path_events(const SwitchedSystemModel& model, double horizon, PathRng& rng,
                              std::optional<int> initial_state) {
    SamplePath path;
    path.horizon = horizon;
    auto push = [&](double t, const std::string& label) {
        if (path.events.empty() || path.events.back().second != label)
            path.events.emplace_back(t, label);
    };

    switch (model.system_class) {
        case SystemClass::Mjls: {
            const Matrix& q = model.generator.value().Q;
            int state = pick_initial(rng, initial_state, static_cast<int>(q.rows()));
            push(0.0, model.modes.labels[static_cast<std::size_t>(state)]);
            double t = 0.0;
            while (true) {
                const double rate = -q(state, state);
                if (rate <= 0.0) break;
                t += rng.exponential(rate);
                if (t >= horizon) break;
                state = ctmc_next(rng, q, state);
                push(t, model.modes.labels[static_cast<std::size_t>(state)]);
            }
            break;
        }
        case SystemClass::SemiMarkov: {
            const SemiMarkovKernel& kernel = model.kernel.value();
            auto label_of = [&](int theta) -> const std::string& {
                return model.modes.labels[static_cast<std::size_t>(
                    model.mode_of_state[static_cast<std::size_t>(theta)])];
            };
            int theta = pick_initial(rng, initial_state, kernel.N);
            push(0.0, label_of(theta));
            std::vector<double> row(static_cast<std::size_t>(kernel.N));
            double t = 0.0;
            while (true) {
                double total = 0.0;
                for (int j = 0; j < kernel.N; ++j) {
                    row[static_cast<std::size_t>(j)] = kernel.P(theta, j);
                    total += kernel.P(theta, j);
                }
                const int next = rng.discrete(row, total);
                t += rng.holding(kernel.holding_for(theta, next));
                if (t >= horizon) break;
                theta = next;
                push(t, label_of(theta));
            }
            break;
        }
        case SystemClass::Regenerative: {
            if (initial_state && *initial_state != 0)
                throw ValidationError("initial state out of range");
            std::vector<double> probs;
            probs.reserve(model.cycles.size());
            double total = 0.0;
            for (const CycleScenario& scenario : model.cycles) {
                probs.push_back(scenario.prob);
                total += scenario.prob;
            }
            double t = 0.0;
            while (t < horizon) {
                const CycleScenario& scenario =
                    model.cycles[static_cast<std::size_t>(rng.discrete(probs, total))];
                for (const ScheduleStep& step : scenario.schedule) {
                    if (t >= horizon) break;
                    push(t, step.label);
                    t += step.duration;
                }
            }
            break;
        }
        case SystemClass::PeriodicObservation: {
            const PeriodicObservationSpec& spec = model.periodic.value();
            const Matrix& q = spec.generator.Q;
            const double h = spec.sampling_period;
            int r = pick_initial(rng, initial_state, static_cast<int>(q.rows()));
            int held = r;
            push(0.0, closed_loop_label(r + 1, held + 1));
            auto next_jump = [&](double from) {
                const double rate = -q(r, r);
                return rate > 0.0 ? from + rng.exponential(rate) : kInf;
            };
            double t_jump = next_jump(0.0);
            long sample_index = 1;
            while (true) {
                const double t_sample = static_cast<double>(sample_index) * h;
                if (t_jump < t_sample) {
                    if (t_jump >= horizon) break;
                    r = ctmc_next(rng, q, r);
                    push(t_jump, closed_loop_label(r + 1, held + 1));
                    t_jump = next_jump(t_jump);
                } else {
                    if (t_sample >= horizon) break;
                    if (held != r) {
                        held = r;
                        push(t_sample, closed_loop_label(r + 1, held + 1));
                    }
                    ++sample_index;
                }
            }
            break;
        }
    }
    return path;
}

double pairwise_sum(const double* data, std::size_t count) {
    if (count <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i) s += data[i];
        return s;
    }
    const std::size_t half = count / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, count - half);
}

/// Runs body(k) for k in [0, path_count) on up to `threads` workers. Workers
/// claim fixed-size chunks; outputs must go to per-path slots so the result
/// is independent of the execution interleaving.
void run_parallel_paths(int path_count, int threads, const std::function<void(int)>& body) {
    int worker_count = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (worker_count < 1) worker_count = 1;
    constexpr int kChunk = 64;
    const int chunk_count = (path_count + kChunk - 1) / kChunk;
    worker_count = std::min(worker_count, chunk_count);

    if (worker_count <= 1) {
        for (int k = 0; k < path_count; ++k) body(k);
        return;
    }

    std::atomic<int> next_chunk{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        try {
            while (true) {
                const int c = next_chunk.fetch_add(1);
                if (c >= chunk_count) return;
                const int lo = c * kChunk;
                const int hi = std::min(path_count, lo + kChunk);
                for (int k = lo; k < hi; ++k) body(k);
            }
        } catch (...) {
            const std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(worker_count));
    for (int i = 0; i < worker_count; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Least-squares slope of y against t over [first, last) grid indices.
double fit_slope(const std::vector<double>& t, const std::vector<double>& y,
                 std::size_t first) {
    const std::size_t count = t.size() - first;
    if (count < 2) return std::numeric_limits<double>::quiet_NaN();
    double t_mean = 0.0;
    double y_mean = 0.0;
    for (std::size_t i = first; i < t.size(); ++i) {
        t_mean += t[i];
        y_mean += y[i];
    }
    t_mean /= static_cast<double>(count);
    y_mean /= static_cast<double>(count);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = first; i < t.size(); ++i) {
        num += (t[i] - t_mean) * (y[i] - y_mean);
        den += (t[i] - t_mean) * (t[i] - t_mean);
    }
    return num / den;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += "\"\"";
        else quoted += c;
    }
    quoted += '"';
    return quoted;
}

/// Advances x across a window of length h driven by the chain of generator q
/// starting in state r (updated in place); matrix_of(r) gives the active
/// dynamics while the chain occupies r.
void propagate_window(PathRng& rng, const Matrix& q, int& r, double h,
                      const std::function<const Matrix&(int)>& matrix_of, Vector& x) {
    double t = 0.0;
    while (true) {
        const double rate = -q(r, r);
        const double stay = rate > 0.0 ? rng.exponential(rate) : kInf;
        if (t + stay >= h) {
            x = expm(matrix_of(r) * (h - t)) * x;
            return;
        }
        x = expm(matrix_of(r) * stay) * x;
        t += stay;
        r = ctmc_next(rng, q, r);
    }
}

}  // namespace

std::uint64_t mc_path_seed(std::uint64_t master_seed, std::uint64_t path_index) {
    std::uint64_t z = master_seed + (path_index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

const std::string& SamplePath::mode_at(double t) const {
    if (events.empty()) throw ValidationError("empty sample path");
    auto it = std::upper_bound(events.begin(), events.end(), t,
                               [](double v, const std::pair<double, std::string>& e) {
                                   return v < e.first;
                               });
    if (it == events.begin()) throw ValidationError("query time precedes the path start");
    return std::prev(it)->second;
}

SamplePath sample_switching(const SwitchedSystemModel& model, double horizon,
                            std::uint64_t seed, std::optional<int> initial_state) {
    if (!std::isfinite(horizon) || horizon <= 0.0)
        throw ValidationError("horizon must be strictly positive");
    PathRng rng(seed);
    SamplePath path = sample_path_events(model, horizon, rng, initial_state);
    path.seed = seed;
    return path;
}

std::vector<Vector> propagate_state(const SamplePath& path, const ModeSet& modes,
                                    const Vector& x0, const std::vector<double>& time_grid) {
    if (path.events.empty()) throw ValidationError("empty sample path");
    if (x0.size() != modes.n) throw DimensionError("x0 dimension must match the mode set");

    std::vector<Vector> out;
    out.reserve(time_grid.size());
    std::size_t e = 0;
    double pos = path.events.front().first;
    Vector x = x0;
    for (double t : time_grid) {
        if (!std::isfinite(t) || t < pos)
            throw ValidationError("time grid must be nondecreasing and start at or after 0");
        if (t > path.horizon) throw ValidationError("time grid exceeds the path horizon");
        while (e + 1 < path.events.size() && path.events[e + 1].first <= t) {
            const double step = path.events[e + 1].first - pos;
            if (step > 0.0) x = expm(modes.matrix(path.events[e].second) * step) * x;
            pos = path.events[e + 1].first;
            ++e;
        }
        if (t > pos) {
            x = expm(modes.matrix(path.events[e].second) * (t - pos)) * x;
            pos = t;
        }
        out.push_back(x);
    }
    return out;
}

TrajectoryEnsemble estimate_moments(const SwitchedSystemModel& model, int m,
                                    const MomentOptions& options) {
    if (m < 1) throw ValidationError("moment degree m must be a positive integer");
    if (options.path_count < 1) throw ValidationError("path_count must be at least 1");
    if (!std::isfinite(options.horizon) || options.horizon <= 0.0)
        throw ValidationError("horizon must be strictly positive");
    if (!std::isfinite(options.grid_step) || options.grid_step <= 0.0)
        throw ValidationError("grid_step must be strictly positive");
    if (options.x0) {
        if (options.x0->size() != model.modes.n)
            throw DimensionError("x0 dimension must match the mode set");
        if (options.x0->norm() == 0.0) throw ValidationError("x0 must be nonzero");
    }

    const ModeSet& modes = model.modes;
    const int grid_count =
        1 + static_cast<int>(std::floor(options.horizon / options.grid_step + 1e-9));
    std::vector<double> grid(static_cast<std::size_t>(grid_count));
    for (int g = 0; g < grid_count; ++g)
        grid[static_cast<std::size_t>(g)] = static_cast<double>(g) * options.grid_step;

    // One-grid-step propagators, shared read-only across workers. Cells that
    // contain a switch fall back to per-segment exponentials.
    std::map<std::string, Matrix> step_propagator;
    for (const std::string& label : modes.labels)
        step_propagator.emplace(label, expm(modes.matrix(label) * options.grid_step));

    const int path_count = options.path_count;
    Matrix log_norms(path_count, grid_count);

    run_parallel_paths(path_count, options.threads, [&](int k) {
        PathRng rng(mc_path_seed(options.seed, static_cast<std::uint64_t>(k)));
        const SamplePath path =
            sample_path_events(model, options.horizon, rng, options.initial_state);
        Vector u = options.x0 ? *options.x0 : rng.unit_sphere(modes.n);
        double log_norm = 0.0;
        {
            const double norm = u.norm();
            log_norm = std::log(norm);
            u /= norm;
        }
        auto apply = [&](const Matrix& propagator) {
            const Vector v = propagator * u;
            const double norm = v.norm();
            if (norm == 0.0) {
                u.setZero();
                log_norm = -kInf;
                return;
            }
            log_norm += std::log(norm);
            u = v / norm;
        };

        log_norms(k, 0) = log_norm;
        std::size_t e = 0;
        for (int g = 1; g < grid_count; ++g) {
            const double t_g = static_cast<double>(g) * options.grid_step;
            double pos = static_cast<double>(g - 1) * options.grid_step;
            bool crossed = false;
            while (e + 1 < path.events.size() && path.events[e + 1].first <= t_g) {
                const double step = path.events[e + 1].first - pos;
                if (step > 0.0) apply(expm(modes.matrix(path.events[e].second) * step));
                pos = path.events[e + 1].first;
                ++e;
                crossed = true;
            }
            if (crossed) {
                if (t_g > pos) apply(expm(modes.matrix(path.events[e].second) * (t_g - pos)));
            } else {
                apply(step_propagator.at(path.events[e].second));
            }
            log_norms(k, g) = log_norm;
        }
    });

    TrajectoryEnsemble ensemble;
    ensemble.time_grid = grid;
    ensemble.path_count = path_count;
    ensemble.m = m;
    ensemble.moment_mean.resize(static_cast<std::size_t>(grid_count));
    ensemble.log_moment_mean.resize(static_cast<std::size_t>(grid_count));

    std::vector<double> scaled(static_cast<std::size_t>(path_count));
    for (int g = 0; g < grid_count; ++g) {
        double peak = -kInf;
        for (int k = 0; k < path_count; ++k)
            peak = std::max(peak, static_cast<double>(m) * log_norms(k, g));
        double log_mean;
        if (peak == -kInf) {
            log_mean = -kInf;
        } else {
            for (int k = 0; k < path_count; ++k)
                scaled[static_cast<std::size_t>(k)] =
                    std::exp(static_cast<double>(m) * log_norms(k, g) - peak);
            const double sum = pairwise_sum(scaled.data(), scaled.size());
            log_mean = peak + std::log(sum / static_cast<double>(path_count));
        }
        ensemble.log_moment_mean[static_cast<std::size_t>(g)] = log_mean;
        ensemble.moment_mean[static_cast<std::size_t>(g)] = std::exp(log_mean);
    }

    if (options.x0 && grid_count > 0) {
        const double nrm = options.x0->norm();
        ensemble.moment_mean[0] = std::pow(nrm, m);
        ensemble.log_moment_mean[0] = static_cast<double>(m) * std::log(nrm);
    }

    for (int g = 0; g < grid_count; ++g) {
        if (!std::isfinite(ensemble.moment_mean[static_cast<std::size_t>(g)])) {
            ensemble.saturated = true;
            ensemble.saturation_time = grid[static_cast<std::size_t>(g)];
            break;
        }
    }

    if (options.keep_path_norms) {
        ensemble.per_path_norms.resize(static_cast<std::size_t>(path_count));
        for (int k = 0; k < path_count; ++k) {
            auto& row = ensemble.per_path_norms[static_cast<std::size_t>(k)];
            row.resize(static_cast<std::size_t>(grid_count));
            for (int g = 0; g < grid_count; ++g)
                row[static_cast<std::size_t>(g)] =
                    std::exp(static_cast<double>(m) * log_norms(k, g));
        }
    }

    ensemble.empirical_growth_rate =
        fit_slope(grid, ensemble.log_moment_mean, grid.size() / 2);
    return ensemble;
}

LiftMomentEstimate empirical_lift_propagation(const SwitchedSystemModel& model, int m,
                                              const LiftPropagationOptions& options) {
    if (m < 1) throw ValidationError("moment degree m must be a positive integer");
    if (options.path_count < 1) throw ValidationError("path_count must be at least 1");
    if (options.steps < 0) throw ValidationError("steps must be nonnegative");
    if (options.x0) {
        if (options.x0->size() != model.modes.n)
            throw DimensionError("x0 dimension must match the mode set");
        if (options.x0->norm() == 0.0) throw ValidationError("x0 must be nonzero");
    }

    double window = 0.0;
    switch (model.system_class) {
        case SystemClass::Mjls:
            if (!options.sampling_period)
                throw ValidationError("mjls lift propagation needs a sampling period");
            window = *options.sampling_period;
            break;
        case SystemClass::PeriodicObservation:
            window = options.sampling_period ? *options.sampling_period
                                             : model.periodic.value().sampling_period;
            break;
        default:
            if (options.sampling_period)
                throw ValidationError(
                    "a sampling period applies only to mjls and periodic_observation");
            break;
    }
    if (model.system_class == SystemClass::Mjls ||
        model.system_class == SystemClass::PeriodicObservation) {
        if (!std::isfinite(window) || window <= 0.0)
            throw ValidationError("sampling period must be strictly positive");
    }

    const int n = model.modes.n;
    const MultiIndexBasis basis(n, m);
    const int nm = basis.size();
    const int state_count = model.embedded_state_count();
    const int dim = state_count * nm;
    const int path_count = options.path_count;
    const int snapshots = options.steps + 1;

    Matrix slots = Matrix::Zero(path_count, snapshots * dim);

    run_parallel_paths(path_count, options.threads, [&](int k) {
        PathRng rng(mc_path_seed(options.seed, static_cast<std::uint64_t>(k)));
        int theta = pick_initial(rng, options.initial_state, state_count);
        Vector x = options.x0 ? *options.x0 : rng.unit_sphere(n);

        auto record = [&](int step) {
            const Vector lifted = lift_vector(x, basis);
            for (int c = 0; c < nm; ++c) slots(k, step * dim + theta * nm + c) = lifted(c);
        };
        record(0);

        for (int s = 1; s < snapshots; ++s) {
            switch (model.system_class) {
                case SystemClass::Mjls: {
                    const Matrix& q = model.generator.value().Q;
                    propagate_window(
                        rng, q, theta, window,
                        [&](int r) -> const Matrix& { return model.modes.matrix_at(r); }, x);
                    break;
                }
                case SystemClass::SemiMarkov: {
                    const SemiMarkovKernel& kernel = model.kernel.value();
                    std::vector<double> row(static_cast<std::size_t>(kernel.N));
                    double total = 0.0;
                    for (int j = 0; j < kernel.N; ++j) {
                        row[static_cast<std::size_t>(j)] = kernel.P(theta, j);
                        total += kernel.P(theta, j);
                    }
                    const int next = rng.discrete(row, total);
                    const double tau = rng.holding(kernel.holding_for(theta, next));
                    const Matrix& a = model.modes.matrix_at(
                        model.mode_of_state[static_cast<std::size_t>(theta)]);
                    x = expm(a * tau) * x;
                    theta = next;
                    break;
                }
                case SystemClass::Regenerative: {
                    std::vector<double> probs;
                    probs.reserve(model.cycles.size());
                    double total = 0.0;
                    for (const CycleScenario& scenario : model.cycles) {
                        probs.push_back(scenario.prob);
                        total += scenario.prob;
                    }
                    const CycleScenario& scenario =
                        model.cycles[static_cast<std::size_t>(rng.discrete(probs, total))];
                    for (const ScheduleStep& step : scenario.schedule)
                        x = expm(model.modes.matrix(step.label) * step.duration) * x;
                    theta = 0;
                    break;
                }
                case SystemClass::PeriodicObservation: {
                    const PeriodicObservationSpec& spec = model.periodic.value();
                    const int held = theta;
                    propagate_window(
                        rng, spec.generator.Q, theta, window,
                        [&](int r) -> const Matrix& {
                            return model.modes.matrix(closed_loop_label(r + 1, held + 1));
                        },
                        x);
                    break;
                }
            }
            record(s);
        }
    });

    LiftMomentEstimate estimate;
    estimate.path_count = path_count;
    estimate.mean.resize(static_cast<std::size_t>(snapshots));
    estimate.std_error.resize(static_cast<std::size_t>(snapshots));
    std::vector<double> column(static_cast<std::size_t>(path_count));
    std::vector<double> squares(static_cast<std::size_t>(path_count));
    for (int s = 0; s < snapshots; ++s) {
        Vector mean(dim);
        Vector std_error(dim);
        for (int c = 0; c < dim; ++c) {
            for (int k = 0; k < path_count; ++k) {
                const double v = slots(k, s * dim + c);
                column[static_cast<std::size_t>(k)] = v;
                squares[static_cast<std::size_t>(k)] = v * v;
            }
            const double mu = pairwise_sum(column.data(), column.size()) /
                              static_cast<double>(path_count);
            mean(c) = mu;
            if (path_count < 2) {
                std_error(c) = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            const double mean_sq = pairwise_sum(squares.data(), squares.size()) /
                                   static_cast<double>(path_count);
            const double variance = std::max(0.0, mean_sq - mu * mu) *
                                    static_cast<double>(path_count) /
                                    static_cast<double>(path_count - 1);
            std_error(c) = std::sqrt(variance / static_cast<double>(path_count));
        }
        estimate.mean[static_cast<std::size_t>(s)] = std::move(mean);
        estimate.std_error[static_cast<std::size_t>(s)] = std::move(std_error);
    }
    return estimate;
}

void write_moments_csv(std::ostream& out, const TrajectoryEnsemble& ensemble) {
    out << "t,moment_mean\n";
    for (std::size_t g = 0; g < ensemble.time_grid.size(); ++g) {
        out << format_double(ensemble.time_grid[g]) << ','
            << format_double(ensemble.moment_mean[g]) << '\n';
    }
}

void write_paths_csv(std::ostream& out, const TrajectoryEnsemble& ensemble) {
    if (ensemble.per_path_norms.empty())
        throw ValidationError("per-path norms were not retained");
    out << "t,path_id,norm_m\n";
    for (std::size_t g = 0; g < ensemble.time_grid.size(); ++g) {
        for (std::size_t k = 0; k < ensemble.per_path_norms.size(); ++k) {
            out << format_double(ensemble.time_grid[g]) << ',' << k << ','
                << format_double(ensemble.per_path_norms[k][g]) << '\n';
        }
    }
}

void write_switching_csv(std::ostream& out, const SamplePath& path) {
    out << "time,mode\n";
    for (const auto& [t, label] : path.events)
        out << format_double(t) << ',' << csv_field(label) << '\n';
}

}  // namespace meanstab
