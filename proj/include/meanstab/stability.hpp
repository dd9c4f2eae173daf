#pragma once

#include "meanstab/common.hpp"
#include "meanstab/procmodels.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace meanstab {

enum class SpectralTest { Schur, Hurwitz };
enum class Verdict { Stable, Unstable, Marginal };

std::string to_string(SpectralTest t);
std::string to_string(Verdict v);

/// Outcome of a stability test: the constructed block matrix together with
/// the decisive spectral quantity and its reading.
///
/// decisive_value is the spectral radius under a Schur test and the spectral
/// abscissa under a Hurwitz test. Verdicts within 1e-9 of the boundary are
/// Marginal: the characterization is strict, so no claim is made there.
///
/// growth_rate is log(decisive_value)/h when a sampling period h applies,
/// log(decisive_value) per regeneration cycle for the other Schur tests, and
/// the spectral abscissa itself for Hurwitz tests.
struct StabilityReport {
    SystemClass system_class = SystemClass::Mjls;
    SpectralTest test = SpectralTest::Schur;
    Matrix matrix;
    double decisive_value = 0.0;
    Verdict verdict = Verdict::Marginal;
    double growth_rate = 0.0;
    std::optional<double> h;
    std::string a1_reason;
    double support_bound = 0.0;

    int dimension() const { return static_cast<int>(matrix.rows()); }
};

/// Hurwitz test matrix for a Markov jump linear system: block (i,j) equals
/// Q(j,i)·I plus, on the diagonal, the infinitesimal lift of mode i.
StabilityReport mjls_matrix(const InfinitesimalGenerator& generator, const ModeSet& modes,
                            int m);

/// Schur test matrix for a semi-Markov system: block (i,j) equals
/// P(j,i)·E[expm(lift(A_j)·τ)] with τ drawn from the (j,i) holding law.
/// Expectations are exact for deterministic and discrete holdings and use
/// adaptive quadrature for the continuous ones.
StabilityReport semimarkov_matrix(const SemiMarkovKernel& kernel, const ModeSet& modes,
                                  const std::vector<int>& mode_of_state, int m);

/// Schur test matrix for a regenerative system: the scenario-weighted mean of
/// the lifted cycle propagators, where each propagator multiplies segment
/// exponentials with the earliest segment rightmost.
StabilityReport regenerative_matrix(const std::vector<CycleScenario>& cycles,
                                    const ModeSet& modes, int m);

/// Schur test matrix for periodically observed mode feedback, evaluated at
/// the spec's sampling period. Block column j is taken from the exponential
/// of the generator-coupled block matrix that holds gain j fixed. Requires
/// even m.
StabilityReport periodic_observation_matrix(const PeriodicObservationSpec& spec, int m);

/// Same construction at a caller-chosen sampling period.
StabilityReport periodic_observation_matrix(const PeriodicObservationSpec& spec, int m,
                                            double h);

/// Finite conditional distribution of a one-cycle propagator: atoms of
/// (probability, matrix).
using PropagatorAtoms = std::vector<std::pair<double, Matrix>>;

/// Schur test matrix for a discrete-time jump linear system given finite
/// per-transition propagator distributions keyed by 0-based (from, to):
/// block (i,j) equals P(j,i)·Σ_atoms prob·induced_matrix(F, m). This is also
/// the plug-in point for cycle structures outside the built-in classes.
StabilityReport discrete_semimarkov_matrix(
    const Matrix& P, const std::map<std::pair<int, int>, PropagatorAtoms>& propagators, int m);

struct SweepRow {
    double h = 0.0;
    double rho = 0.0;
    double growth_rate = 0.0;
};

/// Evaluates the periodic-observation test over a grid of sampling periods,
/// one row per grid point in input order.
std::vector<SweepRow> sweep_growth_rate(const PeriodicObservationSpec& spec, int m,
                                        const std::vector<double>& h_grid);

/// Dispatches to the class-specific construction. h_override retunes the
/// sampling period and is accepted only for periodic-observation models.
StabilityReport analyze(const SwitchedSystemModel& model,
                        std::optional<double> h_override = std::nullopt);

std::string report_to_text(const StabilityReport& report);
std::string report_to_json(const StabilityReport& report);

/// Header `h,rho,growth_rate`, one row per grid point, '.' decimals, LF ends.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace meanstab
