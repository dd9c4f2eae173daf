#include "meanstab/procmodels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

namespace meanstab {

namespace {

using nlohmann::json;

constexpr double kSumTol = 1e-12;

int line_of_byte(const std::string& text, std::size_t byte) {
    const std::size_t end = std::min(byte, text.size());
    int line = 1;
    for (std::size_t i = 0; i < end; ++i) {
        if (text[i] == '\n') ++line;
    }
    return line;
}

[[noreturn]] void schema_error(const std::string& message) {
    throw ParseError("model schema: " + message);
}

const json& field(const json& obj, const char* key, const std::string& ctx) {
    if (!obj.is_object()) schema_error(ctx + " must be an object");
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(ctx + " is missing field '" + key + "'");
    return *it;
}

void check_known_keys(const json& obj, std::initializer_list<const char*> keys,
                      const std::string& ctx) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const bool known = std::any_of(keys.begin(), keys.end(),
                                       [&](const char* k) { return it.key() == k; });
        if (!known) schema_error(ctx + " has unknown field '" + it.key() + "'");
    }
}

double as_number(const json& v, const std::string& ctx) {
    if (!v.is_number()) schema_error(ctx + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) schema_error(ctx + " must be finite");
    return d;
}

int as_int(const json& v, const std::string& ctx) {
    if (!v.is_number_integer() && !v.is_number_unsigned())
        schema_error(ctx + " must be an integer");
    return v.get<int>();
}

std::string as_string(const json& v, const std::string& ctx) {
    if (!v.is_string()) schema_error(ctx + " must be a string");
    return v.get<std::string>();
}

Matrix as_matrix(const json& v, const std::string& ctx) {
    if (!v.is_array() || v.empty()) schema_error(ctx + " must be a nonempty array of rows");
    const std::size_t rows = v.size();
    std::size_t cols = 0;
    Matrix out;
    for (std::size_t r = 0; r < rows; ++r) {
        const json& row = v[r];
        if (!row.is_array() || row.empty())
            schema_error(ctx + " rows must be nonempty arrays of numbers");
        if (r == 0) {
            cols = row.size();
            out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        } else if (row.size() != cols) {
            schema_error(ctx + " rows must all have the same length");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                as_number(row[c], ctx + " entry");
        }
    }
    return out;
}

json matrix_json(const Matrix& a) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<Matrix> as_matrix_list(const json& v, const std::string& ctx) {
    if (!v.is_array() || v.empty()) schema_error(ctx + " must be a nonempty array of matrices");
    std::vector<Matrix> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(as_matrix(v[i], ctx + "[" + std::to_string(i) + "]"));
    return out;
}

json matrix_list_json(const std::vector<Matrix>& list) {
    json out = json::array();
    for (const Matrix& a : list) out.push_back(matrix_json(a));
    return out;
}

HoldingDistribution parse_dist(const json& v, const std::string& ctx) {
    const std::string type = as_string(field(v, "type", ctx), ctx + ".type");
    HoldingDistribution out;
    if (type == "deterministic") {
        check_known_keys(v, {"type", "value"}, ctx);
        out.dist = DeterministicHolding{as_number(field(v, "value", ctx), ctx + ".value")};
    } else if (type == "discrete_finite") {
        check_known_keys(v, {"type", "atoms"}, ctx);
        const json& atoms = field(v, "atoms", ctx);
        if (!atoms.is_array() || atoms.empty())
            schema_error(ctx + ".atoms must be a nonempty array");
        DiscreteFiniteHolding d;
        for (const json& a : atoms) {
            if (!a.is_array() || a.size() != 2)
                schema_error(ctx + ".atoms entries must be [time, probability] pairs");
            d.atoms.emplace_back(as_number(a[0], ctx + ".atoms time"),
                                 as_number(a[1], ctx + ".atoms probability"));
        }
        out.dist = std::move(d);
    } else if (type == "uniform") {
        check_known_keys(v, {"type", "lo", "hi"}, ctx);
        out.dist = UniformHolding{as_number(field(v, "lo", ctx), ctx + ".lo"),
                                  as_number(field(v, "hi", ctx), ctx + ".hi")};
    } else if (type == "truncated_exponential") {
        check_known_keys(v, {"type", "rate", "cap"}, ctx);
        out.dist = TruncatedExponentialHolding{as_number(field(v, "rate", ctx), ctx + ".rate"),
                                               as_number(field(v, "cap", ctx), ctx + ".cap")};
    } else {
        schema_error(ctx + " has unknown distribution type '" + type + "'");
    }
    return out;
}

json dist_json(const HoldingDistribution& h) {
    json out;
    out["type"] = h.type_name();
    if (const auto* d = std::get_if<DeterministicHolding>(&h.dist)) {
        out["value"] = d->value;
    } else if (const auto* d = std::get_if<DiscreteFiniteHolding>(&h.dist)) {
        json atoms = json::array();
        for (const auto& [t, p] : d->atoms) atoms.push_back(json::array({t, p}));
        out["atoms"] = std::move(atoms);
    } else if (const auto* d = std::get_if<UniformHolding>(&h.dist)) {
        out["lo"] = d->lo;
        out["hi"] = d->hi;
    } else if (const auto* d = std::get_if<TruncatedExponentialHolding>(&h.dist)) {
        out["rate"] = d->rate;
        out["cap"] = d->cap;
    }
    return out;
}

ModeSet parse_modes(const json& v) {
    if (!v.is_array() || v.empty()) schema_error("modes must be a nonempty array");
    ModeSet out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string ctx = "modes[" + std::to_string(i) + "]";
        const json& entry = v[i];
        check_known_keys(entry, {"label", "matrix"}, ctx);
        const std::string label = as_string(field(entry, "label", ctx), ctx + ".label");
        if (label.empty()) schema_error(ctx + ".label must be nonempty");
        if (out.matrices.count(label)) schema_error("duplicate mode label '" + label + "'");
        out.labels.push_back(label);
        out.matrices.emplace(label, as_matrix(field(entry, "matrix", ctx), ctx + ".matrix"));
    }
    out.n = static_cast<int>(out.matrices.at(out.labels.front()).rows());
    return out;
}

json modes_json(const ModeSet& modes) {
    json out = json::array();
    for (const std::string& label : modes.labels) {
        json entry;
        entry["label"] = label;
        entry["matrix"] = matrix_json(modes.matrix(label));
        out.push_back(std::move(entry));
    }
    return out;
}

}  // namespace

const Matrix& ModeSet::matrix(const std::string& label) const {
    auto it = matrices.find(label);
    if (it == matrices.end()) throw ValidationError("unknown mode label '" + label + "'");
    return it->second;
}

int ModeSet::label_index(const std::string& label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw ValidationError("unknown mode label '" + label + "'");
    return static_cast<int>(it - labels.begin());
}

bool ModeSet::all_metzler() const {
    return std::all_of(labels.begin(), labels.end(),
                       [&](const std::string& label) { return is_metzler(matrix(label)); });
}

bool is_metzler(const Matrix& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (i != j && a(i, j) < 0.0) return false;
        }
    }
    return true;
}

std::map<std::string, bool> check_metzler(const ModeSet& modes) {
    std::map<std::string, bool> flags;
    for (const std::string& label : modes.labels) flags[label] = is_metzler(modes.matrix(label));
    return flags;
}

double HoldingDistribution::support_bound() const {
    if (const auto* d = std::get_if<DeterministicHolding>(&dist)) return d->value;
    if (const auto* d = std::get_if<DiscreteFiniteHolding>(&dist)) {
        double t = 0.0;
        for (const auto& [time, prob] : d->atoms) t = std::max(t, time);
        return t;
    }
    if (const auto* d = std::get_if<UniformHolding>(&dist)) return d->hi;
    return std::get<TruncatedExponentialHolding>(dist).cap;
}

std::string HoldingDistribution::type_name() const {
    switch (dist.index()) {
        case 0: return "deterministic";
        case 1: return "discrete_finite";
        case 2: return "uniform";
        default: return "truncated_exponential";
    }
}

void HoldingDistribution::validate() const {
    if (const auto* d = std::get_if<DeterministicHolding>(&dist)) {
        if (!std::isfinite(d->value) || d->value <= 0.0)
            throw ValidationError("deterministic holding time must be strictly positive");
        return;
    }
    if (const auto* d = std::get_if<DiscreteFiniteHolding>(&dist)) {
        if (d->atoms.empty())
            throw ValidationError("discrete_finite holding needs at least one atom");
        double sum = 0.0;
        for (const auto& [t, p] : d->atoms) {
            if (!std::isfinite(t) || t <= 0.0)
                throw ValidationError("holding atoms must have strictly positive times");
            if (!std::isfinite(p) || p < 0.0)
                throw ValidationError("holding atom probabilities must be nonnegative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kSumTol)
            throw ValidationError("holding atom probabilities must sum to 1");
        return;
    }
    if (const auto* d = std::get_if<UniformHolding>(&dist)) {
        if (!std::isfinite(d->lo) || !std::isfinite(d->hi) || d->lo < 0.0 || d->lo >= d->hi)
            throw ValidationError("uniform holding needs 0 <= lo < hi < infinity");
        return;
    }
    const auto& d = std::get<TruncatedExponentialHolding>(dist);
    if (!std::isfinite(d.rate) || d.rate <= 0.0)
        throw ValidationError("truncated_exponential rate must be strictly positive");
    if (!std::isfinite(d.cap) || d.cap <= 0.0)
        throw ValidationError("truncated_exponential cap must be strictly positive and finite");
}

const HoldingDistribution& SemiMarkovKernel::holding_for(int from, int to) const {
    auto it = holding.find({from, to});
    if (it == holding.end()) {
        throw ValidationError("missing holding distribution for transition " +
                              std::to_string(from + 1) + " -> " + std::to_string(to + 1));
    }
    return it->second;
}

double SemiMarkovKernel::support_bound() const {
    double bound = 0.0;
    for (const auto& [key, dist] : holding) bound = std::max(bound, dist.support_bound());
    return bound;
}

void SemiMarkovKernel::validate() const {
    if (N < 1) throw ValidationError("kernel needs at least one embedded state");
    if (P.rows() != N || P.cols() != N)
        throw DimensionError("kernel matrix P must be N x N");
    for (int i = 0; i < N; ++i) {
        double sum = 0.0;
        for (int j = 0; j < N; ++j) {
            const double p = P(i, j);
            if (!std::isfinite(p) || p < 0.0)
                throw ValidationError("kernel transition probabilities must be nonnegative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kSumTol)
            throw ValidationError("kernel row " + std::to_string(i + 1) + " must sum to 1");
    }
    for (const auto& [key, dist] : holding) {
        if (key.first < 0 || key.first >= N || key.second < 0 || key.second >= N)
            throw ValidationError("holding distribution references a state out of range");
        dist.validate();
    }
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            if (P(i, j) > 0.0) (void)holding_for(i, j);
        }
    }
}

void InfinitesimalGenerator::validate() const {
    if (Q.rows() < 1 || Q.rows() != Q.cols())
        throw DimensionError("generator must be a square matrix");
    for (Eigen::Index i = 0; i < Q.rows(); ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < Q.cols(); ++j) {
            if (!std::isfinite(Q(i, j))) throw ValidationError("generator entries must be finite");
            if (i != j && Q(i, j) < 0.0)
                throw ValidationError("generator off-diagonal entries must be nonnegative");
            sum += Q(i, j);
        }
        if (std::abs(sum) > kSumTol)
            throw ValidationError("generator row " + std::to_string(i + 1) + " must sum to 0");
    }
}

std::string closed_loop_label(int i, int j) {
    return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

std::pair<int, int> parse_closed_loop_label(const std::string& label) {
    int i = 0;
    int j = 0;
    char close = 0;
    std::istringstream in(label);
    char open = 0;
    char comma = 0;
    if (!(in >> open >> i >> comma >> j >> close) || open != '(' || comma != ',' ||
        close != ')' || in.peek() != std::char_traits<char>::eof() || i < 1 || j < 1) {
        throw ValidationError("not a closed-loop mode label: '" + label + "'");
    }
    return {i, j};
}

ModeSet closed_loop_modes(const PeriodicObservationSpec& spec) {
    const int N = static_cast<int>(spec.plant_a.size());
    if (N < 1 || spec.plant_b.size() != spec.plant_a.size() ||
        spec.gains.size() != spec.plant_a.size()) {
        throw DimensionError("plant_A, plant_B, and gains must list one matrix per mode");
    }
    ModeSet out;
    out.n = static_cast<int>(spec.plant_a[0].rows());
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            const Matrix& a = spec.plant_a[static_cast<std::size_t>(i)];
            const Matrix& b = spec.plant_b[static_cast<std::size_t>(i)];
            const Matrix& k = spec.gains[static_cast<std::size_t>(j)];
            if (b.cols() != k.rows() || k.cols() != a.cols() || b.rows() != a.rows())
                throw DimensionError("plant_B and gain dimensions do not compose");
            const std::string label = closed_loop_label(i + 1, j + 1);
            out.labels.push_back(label);
            out.matrices.emplace(label, a + b * k);
        }
    }
    out.metzler_flags = check_metzler(out);
    return out;
}

std::string to_string(SystemClass c) {
    switch (c) {
        case SystemClass::Mjls: return "mjls";
        case SystemClass::SemiMarkov: return "semi_markov";
        case SystemClass::Regenerative: return "regenerative";
        case SystemClass::PeriodicObservation: return "periodic_observation";
    }
    throw ValidationError("unknown system class tag");
}

SystemClass system_class_from_string(const std::string& s) {
    if (s == "mjls") return SystemClass::Mjls;
    if (s == "semi_markov") return SystemClass::SemiMarkov;
    if (s == "regenerative") return SystemClass::Regenerative;
    if (s == "periodic_observation") return SystemClass::PeriodicObservation;
    throw ValidationError("unknown system class '" + s + "'");
}

int SwitchedSystemModel::embedded_state_count() const {
    switch (system_class) {
        case SystemClass::Mjls: return generator ? generator->size() : 0;
        case SystemClass::SemiMarkov: return kernel ? kernel->N : 0;
        case SystemClass::Regenerative: return 1;
        case SystemClass::PeriodicObservation:
            return periodic ? static_cast<int>(periodic->plant_a.size()) : 0;
    }
    return 0;
}

void SwitchedSystemModel::validate() {
    if (m < 1) throw ValidationError("lift degree m must be a positive integer");

    const bool has_gen = generator.has_value();
    const bool has_kernel = kernel.has_value();
    const bool has_cycles = !cycles.empty();
    const bool has_periodic = periodic.has_value();
    auto require_blocks = [&](bool gen, bool ker, bool cyc, bool per) {
        if (has_gen != gen || has_kernel != ker || has_cycles != cyc || has_periodic != per) {
            throw ValidationError("model carries data blocks that do not belong to class '" +
                                  to_string(system_class) + "'");
        }
    };

    switch (system_class) {
        case SystemClass::Mjls: require_blocks(true, false, false, false); break;
        case SystemClass::SemiMarkov: require_blocks(false, true, false, false); break;
        case SystemClass::Regenerative: require_blocks(false, false, true, false); break;
        case SystemClass::PeriodicObservation: require_blocks(false, false, false, true); break;
    }

    if (system_class == SystemClass::PeriodicObservation) {
        const PeriodicObservationSpec& spec = *periodic;
        const int N = static_cast<int>(spec.plant_a.size());
        if (N < 1) throw ValidationError("periodic model needs at least one plant mode");
        if (static_cast<int>(spec.plant_b.size()) != N ||
            static_cast<int>(spec.gains.size()) != N) {
            throw ValidationError("plant_A, plant_B, and gains must list one matrix per mode");
        }
        const Eigen::Index n = spec.plant_a[0].rows();
        const Eigen::Index p = spec.plant_b[0].cols();
        for (int i = 0; i < N; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            if (spec.plant_a[idx].rows() != n || spec.plant_a[idx].cols() != n)
                throw DimensionError("plant_A matrices must be square with a shared dimension");
            if (spec.plant_b[idx].rows() != n || spec.plant_b[idx].cols() != p)
                throw DimensionError("plant_B matrices must share one input dimension");
            if (spec.gains[idx].rows() != p || spec.gains[idx].cols() != n)
                throw DimensionError("gain matrices must be input-by-state");
        }
        spec.generator.validate();
        if (spec.generator.size() != N)
            throw ValidationError("periodic generator size must match the number of plant modes");
        if (!std::isfinite(spec.sampling_period) || spec.sampling_period <= 0.0)
            throw ValidationError("sampling period h must be strictly positive and finite");
        modes = closed_loop_modes(spec);
    }

    if (modes.labels.empty()) throw ValidationError("model needs at least one mode");
    if (modes.n < 1) throw ValidationError("state dimension must be positive");
    {
        std::set<std::string> seen;
        for (const std::string& label : modes.labels) {
            if (label.empty()) throw ValidationError("mode labels must be nonempty");
            if (!seen.insert(label).second)
                throw ValidationError("duplicate mode label '" + label + "'");
            const Matrix& a = modes.matrix(label);
            if (a.rows() != modes.n || a.cols() != modes.n)
                throw DimensionError("mode '" + label + "' must be " + std::to_string(modes.n) +
                                     "x" + std::to_string(modes.n));
            if (!a.allFinite())
                throw ValidationError("mode '" + label + "' has non-finite entries");
        }
        if (seen.size() != modes.matrices.size())
            throw ValidationError("mode matrices and labels disagree");
    }
    modes.metzler_flags = check_metzler(modes);

    if (m % 2 == 0) {
        a1_reason = "m is even";
    } else if (modes.all_metzler()) {
        a1_reason = "all mode matrices are Metzler";
    } else {
        const auto bad = std::find_if(modes.labels.begin(), modes.labels.end(),
                                      [&](const std::string& l) { return !modes.metzler_flags.at(l); });
        throw ValidationError("assumption (A1) unsatisfied: m = " + std::to_string(m) +
                              " is odd and mode '" + *bad + "' is not Metzler");
    }

    switch (system_class) {
        case SystemClass::Mjls: {
            generator->validate();
            if (generator->size() != static_cast<int>(modes.labels.size()))
                throw ValidationError("generator size must match the number of modes");
            if (!mode_of_state.empty())
                throw ValidationError("mode_of_state applies only to semi_markov models");
            support_bound = std::numeric_limits<double>::infinity();
            break;
        }
        case SystemClass::SemiMarkov: {
            kernel->validate();
            if (mode_of_state.empty()) {
                if (kernel->N != static_cast<int>(modes.labels.size()))
                    throw ValidationError(
                        "semi_markov models pair embedded states with modes one-to-one; "
                        "mode count must equal N");
                for (int i = 0; i < kernel->N; ++i) mode_of_state.push_back(i);
            }
            if (static_cast<int>(mode_of_state.size()) != kernel->N)
                throw ValidationError("mode_of_state must assign a mode to each embedded state");
            for (int idx : mode_of_state) {
                if (idx < 0 || idx >= static_cast<int>(modes.labels.size()))
                    throw ValidationError("mode_of_state references a mode out of range");
            }
            support_bound = kernel->support_bound();
            break;
        }
        case SystemClass::Regenerative: {
            if (!mode_of_state.empty())
                throw ValidationError("mode_of_state applies only to semi_markov models");
            double prob_sum = 0.0;
            double bound = 0.0;
            for (const CycleScenario& scenario : cycles) {
                if (!std::isfinite(scenario.prob) || scenario.prob < 0.0)
                    throw ValidationError("scenario probabilities must be nonnegative");
                prob_sum += scenario.prob;
                if (scenario.schedule.empty())
                    throw ValidationError("every scenario needs a nonempty schedule");
                double cycle_len = 0.0;
                for (const ScheduleStep& step : scenario.schedule) {
                    (void)modes.matrix(step.label);
                    if (!std::isfinite(step.duration) || step.duration <= 0.0)
                        throw ValidationError("schedule durations must be strictly positive");
                    cycle_len += step.duration;
                }
                bound = std::max(bound, cycle_len);
            }
            if (std::abs(prob_sum - 1.0) > kSumTol)
                throw ValidationError("scenario probabilities must sum to 1");
            support_bound = bound;
            break;
        }
        case SystemClass::PeriodicObservation: {
            if (!mode_of_state.empty())
                throw ValidationError("mode_of_state applies only to semi_markov models");
            support_bound = periodic->sampling_period;
            break;
        }
    }
}

SwitchedSystemModel parse_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model: ") + e.what(),
                         line_of_byte(text, static_cast<std::size_t>(e.byte)));
    }
    if (!doc.is_object()) schema_error("top level must be an object");
    check_known_keys(doc, {"version", "m", "class", "modes", "generator", "kernel", "cycles",
                           "periodic"},
                     "model");
    const int version = as_int(field(doc, "version", "model"), "version");
    if (version != 1)
        throw ParseError("unsupported model version " + std::to_string(version));

    SwitchedSystemModel model;
    model.m = as_int(field(doc, "m", "model"), "m");
    model.system_class =
        system_class_from_string(as_string(field(doc, "class", "model"), "class"));

    switch (model.system_class) {
        case SystemClass::Mjls: {
            model.modes = parse_modes(field(doc, "modes", "model"));
            model.generator =
                InfinitesimalGenerator{as_matrix(field(doc, "generator", "model"), "generator")};
            break;
        }
        case SystemClass::SemiMarkov: {
            model.modes = parse_modes(field(doc, "modes", "model"));
            const json& k = field(doc, "kernel", "model");
            check_known_keys(k, {"P", "holding"}, "kernel");
            SemiMarkovKernel kernel;
            kernel.P = as_matrix(field(k, "P", "kernel"), "kernel.P");
            kernel.N = static_cast<int>(kernel.P.rows());
            const json& holdings = field(k, "holding", "kernel");
            if (!holdings.is_array()) schema_error("kernel.holding must be an array");
            for (std::size_t i = 0; i < holdings.size(); ++i) {
                const std::string ctx = "kernel.holding[" + std::to_string(i) + "]";
                const json& entry = holdings[i];
                check_known_keys(entry, {"from", "to", "dist"}, ctx);
                const int from = as_int(field(entry, "from", ctx), ctx + ".from");
                const int to = as_int(field(entry, "to", ctx), ctx + ".to");
                if (from < 1 || from > kernel.N || to < 1 || to > kernel.N)
                    schema_error(ctx + " references a state outside 1.." +
                                 std::to_string(kernel.N));
                const std::pair<int, int> key{from - 1, to - 1};
                if (kernel.holding.count(key))
                    schema_error(ctx + " duplicates transition " + std::to_string(from) + " -> " +
                                 std::to_string(to));
                kernel.holding.emplace(key, parse_dist(field(entry, "dist", ctx), ctx + ".dist"));
            }
            model.kernel = std::move(kernel);
            break;
        }
        case SystemClass::Regenerative: {
            model.modes = parse_modes(field(doc, "modes", "model"));
            const json& cs = field(doc, "cycles", "model");
            if (!cs.is_array() || cs.empty())
                schema_error("cycles must be a nonempty array of scenarios");
            for (std::size_t i = 0; i < cs.size(); ++i) {
                const std::string ctx = "cycles[" + std::to_string(i) + "]";
                const json& entry = cs[i];
                check_known_keys(entry, {"prob", "schedule"}, ctx);
                CycleScenario scenario;
                scenario.prob = as_number(field(entry, "prob", ctx), ctx + ".prob");
                const json& schedule = field(entry, "schedule", ctx);
                if (!schedule.is_array() || schedule.empty())
                    schema_error(ctx + ".schedule must be a nonempty array");
                for (std::size_t s = 0; s < schedule.size(); ++s) {
                    const std::string sctx = ctx + ".schedule[" + std::to_string(s) + "]";
                    const json& step = schedule[s];
                    check_known_keys(step, {"label", "duration"}, sctx);
                    scenario.schedule.push_back(
                        {as_string(field(step, "label", sctx), sctx + ".label"),
                         as_number(field(step, "duration", sctx), sctx + ".duration")});
                }
                model.cycles.push_back(std::move(scenario));
            }
            break;
        }
        case SystemClass::PeriodicObservation: {
            if (doc.contains("modes"))
                schema_error(
                    "periodic_observation models derive their closed-loop modes; omit 'modes'");
            const json& p = field(doc, "periodic", "model");
            check_known_keys(p, {"plant_A", "plant_B", "gains", "generator", "h"}, "periodic");
            PeriodicObservationSpec spec;
            spec.plant_a = as_matrix_list(field(p, "plant_A", "periodic"), "periodic.plant_A");
            spec.plant_b = as_matrix_list(field(p, "plant_B", "periodic"), "periodic.plant_B");
            spec.gains = as_matrix_list(field(p, "gains", "periodic"), "periodic.gains");
            spec.generator = InfinitesimalGenerator{
                as_matrix(field(p, "generator", "periodic"), "periodic.generator")};
            spec.sampling_period = as_number(field(p, "h", "periodic"), "periodic.h");
            model.periodic = std::move(spec);
            break;
        }
    }

    model.validate();
    return model;
}

SwitchedSystemModel parse_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("cannot read model file '" + path + "'");
    return parse_model(buf.str());
}

std::string serialize_model(const SwitchedSystemModel& model) {
    json doc;
    doc["version"] = 1;
    doc["m"] = model.m;
    doc["class"] = to_string(model.system_class);
    switch (model.system_class) {
        case SystemClass::Mjls: {
            doc["modes"] = modes_json(model.modes);
            doc["generator"] = matrix_json(model.generator->Q);
            break;
        }
        case SystemClass::SemiMarkov: {
            doc["modes"] = modes_json(model.modes);
            json k;
            k["P"] = matrix_json(model.kernel->P);
            json holdings = json::array();
            for (const auto& [key, dist] : model.kernel->holding) {
                json entry;
                entry["from"] = key.first + 1;
                entry["to"] = key.second + 1;
                entry["dist"] = dist_json(dist);
                holdings.push_back(std::move(entry));
            }
            k["holding"] = std::move(holdings);
            doc["kernel"] = std::move(k);
            break;
        }
        case SystemClass::Regenerative: {
            doc["modes"] = modes_json(model.modes);
            json cs = json::array();
            for (const CycleScenario& scenario : model.cycles) {
                json entry;
                entry["prob"] = scenario.prob;
                json schedule = json::array();
                for (const ScheduleStep& step : scenario.schedule) {
                    json s;
                    s["label"] = step.label;
                    s["duration"] = step.duration;
                    schedule.push_back(std::move(s));
                }
                entry["schedule"] = std::move(schedule);
                cs.push_back(std::move(entry));
            }
            doc["cycles"] = std::move(cs);
            break;
        }
        case SystemClass::PeriodicObservation: {
            json p;
            p["plant_A"] = matrix_list_json(model.periodic->plant_a);
            p["plant_B"] = matrix_list_json(model.periodic->plant_b);
            p["gains"] = matrix_list_json(model.periodic->gains);
            p["generator"] = matrix_json(model.periodic->generator.Q);
            p["h"] = model.periodic->sampling_period;
            doc["periodic"] = std::move(p);
            break;
        }
    }
    return doc.dump(2) + "\n";
}

}  // namespace meanstab
