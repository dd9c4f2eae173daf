#include "meanstab/mlift.hpp"
#include "meanstab/montecarlo.hpp"
#include "meanstab/numkernel.hpp"
#include "meanstab/procmodels.hpp"
#include "meanstab/stability.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace meanstab;

/// Command-line misuse distinct from bad model content.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

int verdict_exit(Verdict v) {
    switch (v) {
        case Verdict::Stable: return 0;
        case Verdict::Unstable: return 1;
        case Verdict::Marginal: return 2;
    }
    return 2;
}

/// Relative output paths land in $MEANSTAB_OUT_DIR when it is set.
std::string resolve_out(const std::string& path) {
    if (path.empty() || path.front() == '/') return path;
    const char* dir = std::getenv("MEANSTAB_OUT_DIR");
    if (!dir || !*dir) return path;
    return std::string(dir) + "/" + path;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    const std::string resolved = resolve_out(path);
    std::ofstream out(resolved, std::ios::binary);
    if (!out) throw IoError("cannot open output file '" + resolved + "'");
    out << content;
    if (!out) throw IoError("cannot write output file '" + resolved + "'");
}

std::vector<double> parse_grid(const std::string& spec) {
    double start = 0.0;
    double stop = 0.0;
    double step = 0.0;
    char sep1 = 0;
    char sep2 = 0;
    std::istringstream in(spec);
    if (!(in >> start >> sep1 >> stop >> sep2 >> step) || sep1 != ':' || sep2 != ':' ||
        in.peek() != std::char_traits<char>::eof()) {
        throw UsageError("--h-grid expects START:STOP:STEP");
    }
    if (!(start > 0.0) || !(step > 0.0) || stop < start)
        throw UsageError("--h-grid needs start > 0, step > 0, stop >= start");
    const int count = 1 + static_cast<int>(std::floor((stop - start) / step + 1e-9));
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        grid[static_cast<std::size_t>(i)] = start + static_cast<double>(i) * step;
    return grid;
}

std::string report_to_csv(const StabilityReport& report) {
    std::ostringstream out;
    out << "class,test,dimension,decisive_value,verdict,growth_rate,h\n";
    out << to_string(report.system_class) << ',' << to_string(report.test) << ','
        << report.dimension() << ',' << format_double(report.decisive_value) << ','
        << to_string(report.verdict) << ',' << format_double(report.growth_rate) << ','
        << (report.h ? format_double(*report.h) : "") << '\n';
    return out.str();
}

std::string matrix_text(const Matrix& a) {
    std::ostringstream out;
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            if (c > 0) out << ' ';
            out << format_double(a(r, c));
        }
        out << '\n';
    }
    return out.str();
}

Matrix parse_inline_matrix(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("--matrix: ") + e.what());
    }
    if (!doc.is_array() || doc.empty()) throw ParseError("--matrix must be an array of rows");
    const std::size_t rows = doc.size();
    std::size_t cols = 0;
    Matrix out;
    for (std::size_t r = 0; r < rows; ++r) {
        const auto& row = doc[r];
        if (!row.is_array() || row.empty())
            throw ParseError("--matrix rows must be nonempty arrays of numbers");
        if (r == 0) {
            cols = row.size();
            out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        } else if (row.size() != cols) {
            throw ParseError("--matrix rows must all have the same length");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if (!row[c].is_number()) throw ParseError("--matrix entries must be numbers");
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                row[c].get<double>();
        }
    }
    return out;
}

std::string lift_text(const Matrix& a, int m) {
    const MultiIndexBasis basis(static_cast<int>(a.rows()), m);
    std::ostringstream out;
    out << "n: " << basis.n() << '\n';
    out << "m: " << basis.m() << '\n';
    out << "basis:";
    for (int k = 0; k < basis.size(); ++k) {
        const std::vector<int>& alpha = basis.index(k);
        out << " (";
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            if (i > 0) out << ',';
            out << alpha[i];
        }
        out << ')';
    }
    out << '\n';
    out << "induced:\n" << matrix_text(induced_matrix(a, m).entries);
    out << "infinitesimal:\n" << matrix_text(infinitesimal_lift(a, m).entries);
    return out.str();
}

SwitchedSystemModel load_model(const std::string& path, std::optional<int> m_override) {
    SwitchedSystemModel model = parse_model_file(path);
    if (m_override) {
        model.m = *m_override;
        model.validate();
    }
    return model;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "meanstab: exponential m-th mean stability of randomly switched linear systems.\n"
        "Relative --out paths resolve against $MEANSTAB_OUT_DIR when it is set."};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);

    std::string model_path;
    std::string out_path;
    std::string format = "text";
    std::string grid_spec;
    std::string inline_matrix;
    std::string paths_out;
    std::string switching_out;
    std::optional<int> m_override;
    std::optional<double> h_override;
    int path_count = 100;
    double horizon = 10.0;
    double grid_step = 0.01;
    std::uint64_t seed = 0;
    int threads = 0;

    CLI::App* analyze_cmd =
        app.add_subcommand("analyze", "Decide stability of a model and print the report");
    analyze_cmd->set_help_flag("--help", "Print this help message and exit");
    analyze_cmd->add_option("--model", model_path, "Model file")->required();
    analyze_cmd->add_option("--m", m_override, "Override the model's moment degree");
    analyze_cmd->add_option("--h", h_override,
                            "Override the sampling period (periodic_observation only)");
    analyze_cmd->add_option("--format", format, "Report format")
        ->check(CLI::IsMember({"text", "csv", "json-like"}));
    analyze_cmd->add_option("--out", out_path, "Write the report here instead of stdout");

    CLI::App* sweep_cmd = app.add_subcommand(
        "sweep", "Evaluate a periodic_observation model over a sampling-period grid");
    sweep_cmd->add_option("--model", model_path, "Model file")->required();
    sweep_cmd->add_option("--m", m_override, "Override the model's moment degree");
    sweep_cmd->add_option("--h-grid", grid_spec, "Grid START:STOP:STEP")->required();
    sweep_cmd->add_option("--out", out_path, "Write the CSV here instead of stdout");

    CLI::App* simulate_cmd = app.add_subcommand(
        "simulate", "Estimate E[|x(t)|^m] by Monte Carlo and compare with the analysis");
    simulate_cmd->add_option("--model", model_path, "Model file")->required();
    simulate_cmd->add_option("--m", m_override, "Override the model's moment degree");
    simulate_cmd->add_option("--paths", path_count, "Number of sample paths")
        ->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--horizon", horizon, "Simulation horizon")
        ->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--grid-step", grid_step, "Moment grid step")
        ->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--seed", seed, "Master RNG seed");
    simulate_cmd->add_option("--threads", threads, "Worker threads (0 = hardware)");
    simulate_cmd->add_option("--out", out_path, "Moment CSV path (default stdout)");
    simulate_cmd->add_option("--paths-out", paths_out, "Also write per-path norms here");
    simulate_cmd->add_option("--switching-out", switching_out,
                             "Also write path 0's switching events here");

    CLI::App* lift_cmd =
        app.add_subcommand("lift", "Print the monomial basis and both lifts of a matrix");
    lift_cmd->add_option("--model", model_path, "Model file (lifts every mode)");
    lift_cmd->add_option("--matrix", inline_matrix, "Inline JSON matrix, e.g. [[0,1],[2,3]]");
    lift_cmd->add_option("--m", m_override, "Lift degree (default: model's m, else 2)");
    lift_cmd->add_option("--out", out_path, "Write the dump here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 10;
    }

    try {
        if (analyze_cmd->parsed()) {
            const SwitchedSystemModel model = load_model(model_path, m_override);
            const StabilityReport report = analyze(model, h_override);
            std::string content;
            if (format == "json-like") content = report_to_json(report);
            else if (format == "csv") content = report_to_csv(report);
            else content = report_to_text(report);
            write_output(out_path, content);
            return verdict_exit(report.verdict);
        }

        if (sweep_cmd->parsed()) {
            const SwitchedSystemModel model = load_model(model_path, m_override);
            if (model.system_class != SystemClass::PeriodicObservation)
                throw UsageError("sweep needs a periodic_observation model");
            const std::vector<double> grid = parse_grid(grid_spec);
            const std::vector<SweepRow> rows =
                sweep_growth_rate(model.periodic.value(), model.m, grid);
            std::ostringstream csv;
            write_sweep_csv(csv, rows);
            write_output(out_path, csv.str());

            bool bracketed = false;
            for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
                if (rows[i].rho < 1.0 && rows[i + 1].rho >= 1.0) {
                    std::cerr << "rho = 1 crossing bracketed by h in ["
                              << format_double(rows[i].h) << ", "
                              << format_double(rows[i + 1].h) << "]\n";
                    bracketed = true;
                    break;
                }
            }
            if (!bracketed) {
                if (!rows.empty() && rows.front().rho >= 1.0)
                    std::cerr << "rho >= 1 from the first grid point\n";
                else
                    std::cerr << "no rho = 1 crossing inside the grid\n";
            }
            return 0;
        }

        if (simulate_cmd->parsed()) {
            const SwitchedSystemModel model = load_model(model_path, std::nullopt);
            const int sim_m = m_override ? *m_override : model.m;

            MomentOptions options;
            options.path_count = path_count;
            options.horizon = horizon;
            options.grid_step = grid_step;
            options.seed = seed;
            options.threads = threads;
            options.keep_path_norms = !paths_out.empty();

            const TrajectoryEnsemble ensemble = estimate_moments(model, sim_m, options);

            std::ostringstream moments;
            write_moments_csv(moments, ensemble);
            write_output(out_path, moments.str());

            if (!paths_out.empty()) {
                std::ostringstream per_path;
                write_paths_csv(per_path, ensemble);
                write_output(paths_out, per_path.str());
            }
            if (!switching_out.empty()) {
                const SamplePath path =
                    sample_switching(model, horizon, mc_path_seed(seed, 0));
                std::ostringstream events;
                write_switching_csv(events, path);
                write_output(switching_out, events.str());
            }

            std::string analytic = "unavailable";
            try {
                SwitchedSystemModel analytic_model = model;
                analytic_model.m = sim_m;
                analytic_model.validate();
                analytic = format_double(meanstab::analyze(analytic_model).growth_rate);
            } catch (const std::exception&) {
            }
            std::cerr << "empirical_growth_rate: "
                      << format_double(ensemble.empirical_growth_rate)
                      << "  analytic_growth_rate: " << analytic << '\n';
            if (ensemble.saturated) {
                std::cerr << "moment estimate saturated at t = "
                          << format_double(ensemble.saturation_time) << '\n';
            }
            return 0;
        }

        if (lift_cmd->parsed()) {
            if (model_path.empty() == inline_matrix.empty())
                throw UsageError("lift needs exactly one of --model or --matrix");
            std::string content;
            if (!inline_matrix.empty()) {
                const Matrix a = parse_inline_matrix(inline_matrix);
                content = lift_text(a, m_override ? *m_override : 2);
            } else {
                const SwitchedSystemModel model = load_model(model_path, m_override);
                std::ostringstream out;
                for (const std::string& label : model.modes.labels) {
                    out << "mode '" << label << "'\n";
                    out << lift_text(model.modes.matrix(label), model.m);
                }
                content = out.str();
            }
            write_output(out_path, content);
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 10;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 11;
    } catch (const ParseError& e) {
        if (e.line() > 0)
            std::cerr << "error: line " << e.line() << ": " << e.what() << '\n';
        else
            std::cerr << "error: " << e.what() << '\n';
        return 12;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 12;
    }

    return 10;
}
