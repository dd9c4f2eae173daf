#pragma once

#include "meanstab/common.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace meanstab {

/// The finite family of mode matrices, keyed by label. Label order is part of
/// the value: block constructions and embedded-state indexing follow it.
struct ModeSet {
    int n = 0;
    std::vector<std::string> labels;
    std::map<std::string, Matrix> matrices;
    std::map<std::string, bool> metzler_flags;

    const Matrix& matrix(const std::string& label) const;
    const Matrix& matrix_at(int k) const { return matrix(labels.at(static_cast<size_t>(k))); }
    int label_index(const std::string& label) const;
    bool all_metzler() const;
};

/// True when every off-diagonal entry is nonnegative.
bool is_metzler(const Matrix& a);

/// Per-mode Metzler flags. All-true is the library's sufficient condition for
/// positivity of the switched system; it is not necessary.
std::map<std::string, bool> check_metzler(const ModeSet& modes);

// ---------------------------------------------------------------------------
// Holding-time distributions. All variants have strictly positive, bounded
// support so that the bounded-holding assumption holds by construction.

struct DeterministicHolding {
    double value;
};
struct DiscreteFiniteHolding {
    std::vector<std::pair<double, double>> atoms;  // (time, probability)
};
struct UniformHolding {
    double lo;
    double hi;
};
struct TruncatedExponentialHolding {
    double rate;
    double cap;  // density renormalized over (0, cap]
};

struct HoldingDistribution {
    std::variant<DeterministicHolding, DiscreteFiniteHolding, UniformHolding,
                 TruncatedExponentialHolding>
        dist;

    double support_bound() const;
    std::string type_name() const;
    void validate() const;
};

/// Embedded-chain transition matrix plus per-pair holding distributions.
/// Factorizes the renewal kernel as p_ij * F_ij(t).
struct SemiMarkovKernel {
    int N = 0;
    Matrix P;  // row-stochastic
    std::map<std::pair<int, int>, HoldingDistribution> holding;  // 0-based (from, to)

    const HoldingDistribution& holding_for(int from, int to) const;
    double support_bound() const;
    void validate() const;
};

/// Generator of a continuous-time Markov chain: nonnegative off-diagonal,
/// zero row sums.
struct InfinitesimalGenerator {
    Matrix Q;

    int size() const { return static_cast<int>(Q.rows()); }
    void validate() const;
};

struct ScheduleStep {
    std::string label;
    double duration;
};

struct CycleScenario {
    double prob;
    std::vector<ScheduleStep> schedule;
};

/// State feedback of a Markov jump plant where the controller only sees the
/// mode at multiples of the sampling period.
struct PeriodicObservationSpec {
    std::vector<Matrix> plant_a;  // N matrices, n x n
    std::vector<Matrix> plant_b;  // N matrices, n x p
    std::vector<Matrix> gains;    // N matrices, p x n
    InfinitesimalGenerator generator;
    double sampling_period = 0.0;
};

/// Closed-loop mode label for plant mode i driven by gain j (1-based).
std::string closed_loop_label(int i, int j);

/// Inverse of closed_loop_label; returns 1-based (i, j).
std::pair<int, int> parse_closed_loop_label(const std::string& label);

/// Closed-loop mode set over all (plant mode, gain) pairs:
/// matrix(i,j) = A_i + B_i * K_j.
ModeSet closed_loop_modes(const PeriodicObservationSpec& spec);

enum class SystemClass { Mjls, SemiMarkov, Regenerative, PeriodicObservation };

std::string to_string(SystemClass c);
SystemClass system_class_from_string(const std::string& s);

/// A fully validated switched-system description. `modes` always holds the
/// matrices the trajectory actually switches between; for the periodic class
/// that is the derived closed-loop set over mode pairs.
struct SwitchedSystemModel {
    ModeSet modes;
    int m = 2;
    SystemClass system_class = SystemClass::Mjls;

    std::optional<InfinitesimalGenerator> generator;  // Mjls
    std::optional<SemiMarkovKernel> kernel;           // SemiMarkov
    std::vector<int> mode_of_state;                   // SemiMarkov: embedded state -> mode index
    std::vector<CycleScenario> cycles;                // Regenerative
    std::optional<PeriodicObservationSpec> periodic;  // PeriodicObservation

    std::string a1_reason;       // why the even-or-positive assumption holds
    double support_bound = 0.0;  // bound on holding times; +inf for Mjls

    int embedded_state_count() const;
    /// Checks every invariant and fills a1_reason / support_bound. Throws
    /// ValidationError, including when m is odd and a mode is not Metzler.
    void validate();
};

/// Parses and validates a JSON model document. Syntax errors throw ParseError
/// with a line number; semantic violations throw ValidationError.
SwitchedSystemModel parse_model(const std::string& text);
SwitchedSystemModel parse_model_file(const std::string& path);

/// Writes the model back to its document form; parse(serialize(m)) gives a
/// field-identical model with bit-exact floats.
std::string serialize_model(const SwitchedSystemModel& model);

}  // namespace meanstab
