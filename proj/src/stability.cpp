#include "meanstab/stability.hpp"

#include "meanstab/mlift.hpp"
#include "meanstab/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace meanstab {

namespace {

constexpr double kMarginalTol = 1e-9;
constexpr double kSumTol = 1e-12;

Verdict classify(SpectralTest test, double value) {
    const double boundary = (test == SpectralTest::Schur) ? 1.0 : 0.0;
    if (std::abs(value - boundary) <= kMarginalTol) return Verdict::Marginal;
    return value < boundary ? Verdict::Stable : Verdict::Unstable;
}

void require_a1(const ModeSet& modes, int m) {
    if (m % 2 == 0 || modes.all_metzler()) return;
    for (const std::string& label : modes.labels) {
        if (!is_metzler(modes.matrix(label))) {
            throw ValidationError("assumption (A1) unsatisfied: m = " + std::to_string(m) +
                                  " is odd and mode '" + label + "' is not Metzler");
        }
    }
}

/// E[expm(L·τ)] for τ distributed per `holding`. Exact for point masses,
/// adaptive quadrature otherwise (the integrand is entire in τ).
Matrix expected_exponential(const Matrix& lift, const HoldingDistribution& holding) {
    if (const auto* d = std::get_if<DeterministicHolding>(&holding.dist))
        return expm(lift * d->value);
    if (const auto* d = std::get_if<DiscreteFiniteHolding>(&holding.dist)) {
        Matrix sum = Matrix::Zero(lift.rows(), lift.cols());
        for (const auto& [t, p] : d->atoms) sum += p * expm(lift * t);
        return sum;
    }
    if (const auto* d = std::get_if<UniformHolding>(&holding.dist)) {
        const Matrix integral = integrate_matrix(
            [&](double t) { return expm(lift * t); }, d->lo, d->hi);
        return integral / (d->hi - d->lo);
    }
    const auto& d = std::get<TruncatedExponentialHolding>(holding.dist);
    const Matrix integral = integrate_matrix(
        [&](double t) -> Matrix { return expm(lift * t) * (d.rate * std::exp(-d.rate * t)); },
        0.0, d.cap);
    return integral / (1.0 - std::exp(-d.rate * d.cap));
}

/// Generator-coupled block matrix Qᵀ⊗I + blockdiag of the given lifts.
Matrix coupled_block_matrix(const Matrix& q, const std::vector<Matrix>& lifts) {
    const int N = static_cast<int>(q.rows());
    const Eigen::Index nm = lifts.at(0).rows();
    Matrix out = Matrix::Zero(N * nm, N * nm);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            Eigen::Ref<Matrix> block = out.block(i * nm, j * nm, nm, nm);
            block = q(j, i) * Matrix::Identity(nm, nm);
            if (i == j) block += lifts[static_cast<std::size_t>(i)];
        }
    }
    return out;
}

/// One coupled block matrix per gain index j, holding that gain fixed across
/// all plant modes. These do not depend on the sampling period.
std::vector<Matrix> periodic_block_generators(const PeriodicObservationSpec& spec, int m) {
    const ModeSet cl = closed_loop_modes(spec);
    const int N = static_cast<int>(spec.plant_a.size());
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
        std::vector<Matrix> lifts;
        lifts.reserve(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i)
            lifts.push_back(infinitesimal_lift(cl.matrix(closed_loop_label(i + 1, j + 1)), m)
                                .entries);
        out.push_back(coupled_block_matrix(spec.generator.Q, lifts));
    }
    return out;
}

Matrix periodic_transition_matrix(const std::vector<Matrix>& block_generators, int N,
                                  Eigen::Index nm, double h) {
    Matrix out = Matrix::Zero(N * nm, N * nm);
    for (int j = 0; j < N; ++j) {
        const Matrix e = expm(block_generators[static_cast<std::size_t>(j)] * h);
        out.middleCols(j * nm, nm) = e.middleCols(j * nm, nm);
    }
    return out;
}

StabilityReport finish_schur(SystemClass system_class, Matrix matrix,
                             std::optional<double> h, std::string a1_reason,
                             double support_bound) {
    StabilityReport report;
    report.system_class = system_class;
    report.test = SpectralTest::Schur;
    report.matrix = std::move(matrix);
    report.decisive_value = spectral_summary(report.matrix).spectral_radius;
    report.verdict = classify(SpectralTest::Schur, report.decisive_value);
    report.growth_rate = h ? std::log(report.decisive_value) / *h
                           : std::log(report.decisive_value);
    report.h = h;
    report.a1_reason = std::move(a1_reason);
    report.support_bound = support_bound;
    return report;
}

std::string a1_reason_for(const ModeSet& modes, int m) {
    return (m % 2 == 0) ? "m is even" : "all mode matrices are Metzler";
}

}  // namespace

std::string to_string(SpectralTest t) {
    return t == SpectralTest::Schur ? "Schur" : "Hurwitz";
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Stable: return "stable";
        case Verdict::Unstable: return "unstable";
        case Verdict::Marginal: return "marginal/undecidable";
    }
    return "marginal/undecidable";
}

StabilityReport mjls_matrix(const InfinitesimalGenerator& generator, const ModeSet& modes,
                            int m) {
    generator.validate();
    if (generator.size() != static_cast<int>(modes.labels.size()))
        throw DimensionError("generator size must match the number of modes");
    require_a1(modes, m);

    std::vector<Matrix> lifts;
    lifts.reserve(modes.labels.size());
    for (const std::string& label : modes.labels)
        lifts.push_back(infinitesimal_lift(modes.matrix(label), m).entries);

    StabilityReport report;
    report.system_class = SystemClass::Mjls;
    report.test = SpectralTest::Hurwitz;
    report.matrix = coupled_block_matrix(generator.Q, lifts);
    report.decisive_value = spectral_summary(report.matrix).spectral_abscissa;
    report.verdict = classify(SpectralTest::Hurwitz, report.decisive_value);
    report.growth_rate = report.decisive_value;
    report.a1_reason = a1_reason_for(modes, m);
    report.support_bound = std::numeric_limits<double>::infinity();
    return report;
}

StabilityReport semimarkov_matrix(const SemiMarkovKernel& kernel, const ModeSet& modes,
                                  const std::vector<int>& mode_of_state, int m) {
    kernel.validate();
    if (static_cast<int>(mode_of_state.size()) != kernel.N)
        throw DimensionError("mode_of_state must assign a mode to each embedded state");
    for (int idx : mode_of_state) {
        if (idx < 0 || idx >= static_cast<int>(modes.labels.size()))
            throw ValidationError("mode_of_state references a mode out of range");
    }
    require_a1(modes, m);

    const int N = kernel.N;
    std::vector<Matrix> lifts;
    lifts.reserve(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
        const std::string& label = modes.labels[static_cast<std::size_t>(mode_of_state[j])];
        lifts.push_back(infinitesimal_lift(modes.matrix(label), m).entries);
    }

    const Eigen::Index nm = lifts.at(0).rows();
    Matrix out = Matrix::Zero(N * nm, N * nm);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            const double p = kernel.P(j, i);
            if (p == 0.0) continue;
            out.block(i * nm, j * nm, nm, nm) =
                p * expected_exponential(lifts[static_cast<std::size_t>(j)],
                                         kernel.holding_for(j, i));
        }
    }

    return finish_schur(SystemClass::SemiMarkov, std::move(out), std::nullopt,
                        a1_reason_for(modes, m), kernel.support_bound());
}

StabilityReport regenerative_matrix(const std::vector<CycleScenario>& cycles,
                                    const ModeSet& modes, int m) {
    if (cycles.empty()) throw ValidationError("regenerative analysis needs at least one scenario");
    require_a1(modes, m);

    double prob_sum = 0.0;
    double support = 0.0;
    const int n = modes.n;
    const MultiIndexBasis basis(n, m);
    Matrix out = Matrix::Zero(basis.size(), basis.size());
    for (const CycleScenario& scenario : cycles) {
        if (scenario.prob < 0.0)
            throw ValidationError("scenario probabilities must be nonnegative");
        prob_sum += scenario.prob;
        Matrix phi = Matrix::Identity(n, n);
        double cycle_len = 0.0;
        for (const ScheduleStep& step : scenario.schedule) {
            if (step.duration <= 0.0)
                throw ValidationError("schedule durations must be strictly positive");
            phi = expm(modes.matrix(step.label) * step.duration) * phi;
            cycle_len += step.duration;
        }
        support = std::max(support, cycle_len);
        out += scenario.prob * induced_matrix(phi, m).entries;
    }
    if (std::abs(prob_sum - 1.0) > kSumTol)
        throw ValidationError("scenario probabilities must sum to 1");

    return finish_schur(SystemClass::Regenerative, std::move(out), std::nullopt,
                        a1_reason_for(modes, m), support);
}

StabilityReport periodic_observation_matrix(const PeriodicObservationSpec& spec, int m) {
    return periodic_observation_matrix(spec, m, spec.sampling_period);
}

StabilityReport periodic_observation_matrix(const PeriodicObservationSpec& spec, int m,
                                            double h) {
    if (m % 2 != 0)
        throw ValidationError("the periodic-observation construction requires even m");
    if (!std::isfinite(h) || h <= 0.0)
        throw ValidationError("sampling period h must be strictly positive and finite");
    spec.generator.validate();

    const int N = static_cast<int>(spec.plant_a.size());
    const std::vector<Matrix> block_generators = periodic_block_generators(spec, m);
    const Eigen::Index nm = block_generators.at(0).rows() / N;
    Matrix out = periodic_transition_matrix(block_generators, N, nm, h);

    return finish_schur(SystemClass::PeriodicObservation, std::move(out), h, "m is even", h);
}

StabilityReport discrete_semimarkov_matrix(
    const Matrix& P, const std::map<std::pair<int, int>, PropagatorAtoms>& propagators,
    int m) {
    const int N = static_cast<int>(P.rows());
    if (N < 1 || P.cols() != N) throw DimensionError("P must be a square stochastic matrix");
    for (int i = 0; i < N; ++i) {
        double sum = 0.0;
        for (int j = 0; j < N; ++j) {
            if (P(i, j) < 0.0)
                throw ValidationError("transition probabilities must be nonnegative");
            sum += P(i, j);
        }
        if (std::abs(sum - 1.0) > kSumTol)
            throw ValidationError("P row " + std::to_string(i + 1) + " must sum to 1");
    }

    int n = -1;
    for (const auto& [key, atoms] : propagators) {
        if (key.first < 0 || key.first >= N || key.second < 0 || key.second >= N)
            throw ValidationError("propagator distribution references a state out of range");
        if (atoms.empty()) throw ValidationError("propagator distributions must be nonempty");
        double sum = 0.0;
        for (const auto& [prob, f] : atoms) {
            if (prob < 0.0) throw ValidationError("atom probabilities must be nonnegative");
            sum += prob;
            if (n < 0) n = static_cast<int>(f.rows());
            if (f.rows() != n || f.cols() != n)
                throw DimensionError("propagator atoms must be square with a shared dimension");
        }
        if (std::abs(sum - 1.0) > kSumTol)
            throw ValidationError("atom probabilities must sum to 1");
    }
    if (n < 0) throw ValidationError("propagator distributions must cover the kernel support");

    const MultiIndexBasis basis(n, m);
    const Eigen::Index nm = basis.size();
    Matrix out = Matrix::Zero(N * nm, N * nm);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            const double p = P(j, i);
            if (p == 0.0) continue;
            auto it = propagators.find({j, i});
            if (it == propagators.end())
                throw ValidationError("missing propagator distribution for transition " +
                                      std::to_string(j + 1) + " -> " + std::to_string(i + 1));
            Matrix block = Matrix::Zero(nm, nm);
            for (const auto& [prob, f] : it->second)
                block += prob * induced_matrix(f, m).entries;
            out.block(i * nm, j * nm, nm, nm) = p * block;
        }
    }

    return finish_schur(SystemClass::SemiMarkov, std::move(out), std::nullopt,
                        m % 2 == 0 ? "m is even" : "discrete-time construction", 0.0);
}

std::vector<SweepRow> sweep_growth_rate(const PeriodicObservationSpec& spec, int m,
                                        const std::vector<double>& h_grid) {
    if (m % 2 != 0)
        throw ValidationError("the periodic-observation construction requires even m");
    for (double h : h_grid) {
        if (!std::isfinite(h) || h <= 0.0)
            throw ValidationError("sweep grid values must be strictly positive");
    }
    spec.generator.validate();

    const int N = static_cast<int>(spec.plant_a.size());
    const std::vector<Matrix> block_generators = periodic_block_generators(spec, m);
    const Eigen::Index nm = block_generators.at(0).rows() / N;

    std::vector<SweepRow> rows;
    rows.reserve(h_grid.size());
    for (double h : h_grid) {
        const Matrix a_h = periodic_transition_matrix(block_generators, N, nm, h);
        const double rho = spectral_summary(a_h).spectral_radius;
        rows.push_back({h, rho, std::log(rho) / h});
    }
    return rows;
}

StabilityReport analyze(const SwitchedSystemModel& model, std::optional<double> h_override) {
    if (h_override && model.system_class != SystemClass::PeriodicObservation)
        throw ValidationError("a sampling-period override applies only to periodic_observation");
    switch (model.system_class) {
        case SystemClass::Mjls:
            return mjls_matrix(model.generator.value(), model.modes, model.m);
        case SystemClass::SemiMarkov:
            return semimarkov_matrix(model.kernel.value(), model.modes, model.mode_of_state,
                                     model.m);
        case SystemClass::Regenerative:
            return regenerative_matrix(model.cycles, model.modes, model.m);
        case SystemClass::PeriodicObservation:
            return periodic_observation_matrix(
                model.periodic.value(), model.m,
                h_override ? *h_override : model.periodic->sampling_period);
    }
    throw ValidationError("unknown system class tag");
}

std::string report_to_text(const StabilityReport& report) {
    std::ostringstream out;
    out << "class: " << to_string(report.system_class) << '\n';
    out << "test: " << to_string(report.test) << '\n';
    out << "dimension: " << report.dimension() << '\n';
    out << "decisive_value: " << format_double(report.decisive_value) << '\n';
    out << "verdict: " << to_string(report.verdict) << '\n';
    out << "growth_rate: " << format_double(report.growth_rate) << '\n';
    if (report.h) out << "h: " << format_double(*report.h) << '\n';
    out << "assumption_a1: " << report.a1_reason << '\n';
    out << "support_bound: "
        << (std::isinf(report.support_bound) ? std::string("unbounded")
                                             : format_double(report.support_bound))
        << '\n';
    return out.str();
}

std::string report_to_json(const StabilityReport& report) {
    std::ostringstream out;
    out << "{\n";
    out << "  \"class\": \"" << to_string(report.system_class) << "\",\n";
    out << "  \"test\": \"" << to_string(report.test) << "\",\n";
    out << "  \"dimension\": " << report.dimension() << ",\n";
    out << "  \"decisive_value\": " << format_double(report.decisive_value) << ",\n";
    out << "  \"verdict\": \"" << to_string(report.verdict) << "\",\n";
    out << "  \"growth_rate\": " << format_double(report.growth_rate) << ",\n";
    if (report.h) out << "  \"h\": " << format_double(*report.h) << ",\n";
    out << "  \"assumption_a1\": \"" << report.a1_reason << "\",\n";
    if (std::isinf(report.support_bound))
        out << "  \"support_bound\": \"unbounded\"\n";
    else
        out << "  \"support_bound\": " << format_double(report.support_bound) << "\n";
    out << "}\n";
    return out.str();
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "h,rho,growth_rate\n";
    for (const SweepRow& row : rows) {
        out << format_double(row.h) << ',' << format_double(row.rho) << ','
            << format_double(row.growth_rate) << '\n';
    }
}

}  // namespace meanstab
