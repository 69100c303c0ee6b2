// Command-line front end: configuration-driven entanglement runs on
// free-fermion chains, with the commuting-tridiagonal route alongside the
// direct dense one.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fermichain/pipeline.hpp"
#include "fermichain/spectral.hpp"

namespace {

using namespace fermichain;

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_physics = 3;
constexpr int exit_numerical = 4;
constexpr int exit_nonconvergence = 5;

struct CommonOpts {
    std::string config_path;
    std::string output_path; // overrides config output.path
    std::string format;      // overrides config output.format
    std::string method;      // overrides config method
    bool bits = false;
    std::uint64_t seed = 12345;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool need_config = true) {
    auto* c = cmd->add_option("--config", o.config_path, "JSON run configuration");
    if (need_config) c->required();
    cmd->add_option("--output", o.output_path, "output file path (overrides config)");
    cmd->add_option("--format", o.format, "output format: csv|json (overrides config)")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--method", o.method,
                    "method: via-commutant|direct|both (overrides config)");
    cmd->add_flag("--bits", o.bits, "print entropies in bits instead of nats");
    cmd->add_option("--seed", o.seed, "seed for the randomized verification checks");
}

RunConfig make_config(const CommonOpts& o) {
    RunConfig cfg = load_config(o.config_path);
    if (!o.method.empty()) {
        if (o.method == "via-commutant" || o.method == "via_commutant")
            cfg.method = MethodChoice::via_commutant;
        else if (o.method == "direct")
            cfg.method = MethodChoice::direct;
        else if (o.method == "both")
            cfg.method = MethodChoice::both;
        else
            throw config_error("--method must be via-commutant, direct or both");
    }
    if (!o.output_path.empty() || !o.format.empty()) {
        OutputSpec spec = cfg.output.value_or(OutputSpec{});
        if (!o.output_path.empty()) spec.path = o.output_path;
        if (!o.format.empty()) spec.format = o.format == "json" ? OutputFormat::json
                                                                : OutputFormat::csv;
        if (spec.path.empty())
            throw config_error("--format given without an output path");
        cfg.output = spec;
    }
    return cfg;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open output file: " + path);
    out << text;
}

void emit_rows(const RunConfig& cfg, const std::vector<ResultRow>& rows) {
    if (!cfg.output) return;
    if (cfg.output->format == OutputFormat::csv)
        write_file(cfg.output->path, rows_to_csv(rows));
    else
        write_file(cfg.output->path, rows_to_json(rows).dump(2) + "\n");
}

double in_units(double nats, bool bits) { return bits ? nats / std::log(2.0) : nats; }

void print_rows(const std::vector<ResultRow>& rows, bool bits) {
    const char* unit = bits ? "bits" : "nats";
    for (const ResultRow& r : rows) {
        std::cout << "ell=" << r.ell << " K=" << r.K << " method=" << r.method
                  << " S1=" << format_double(in_units(r.S1_nats, bits)) << " " << unit
                  << " [T,C]=" << format_double(r.commutator_residual)
                  << " max_residual=" << format_double(r.max_rayleigh_residual)
                  << " t=" << format_double(r.wall_time_ms) << "ms";
        for (const std::string& f : r.flags) std::cout << " #" << f;
        std::cout << "\n";
    }
}

int cmd_spectrum(const CommonOpts& o) {
    RunConfig cfg = make_config(o);
    PipelineState st = build_pipeline(cfg);
    const std::size_t n = st.model.chain.sites();
    const auto* analytic = st.model.bispectral.analytic_omega
                               ? &*st.model.bispectral.analytic_omega
                               : nullptr;

    double dev = 0.0;
    std::string text = "k,omega,analytic_omega,abs_err\n";
    for (std::size_t k = 0; k < n; ++k) {
        const double w = st.spectrum.values[k];
        text += std::to_string(k) + ',' + format_double(w);
        if (analytic) {
            const double err = std::abs(w - (*analytic)[k]);
            dev = std::max(dev, err);
            text += ',' + format_double((*analytic)[k]) + ',' + format_double(err);
        } else {
            text += ",,";
        }
        text += '\n';
    }

    std::cout << "sites=" << n << " K=" << st.fermi.K
              << " E0=" << format_double(st.fermi.ground_energy);
    if (analytic) std::cout << " max|omega-analytic|=" << format_double(dev);
    std::cout << "\n";
    if (cfg.output) write_file(cfg.output->path, text);
    return exit_ok;
}

int cmd_entropy(const CommonOpts& o) {
    RunConfig cfg = make_config(o);
    if (!std::holds_alternative<std::size_t>(cfg.ell))
        throw config_error("entropy expects a single ell in the config (use sweep otherwise)");
    const std::vector<ResultRow> rows = run(cfg);
    print_rows(rows, o.bits);
    emit_rows(cfg, rows);
    return exit_ok;
}

int cmd_sweep(const CommonOpts& o) {
    RunConfig cfg = make_config(o);
    if (!std::holds_alternative<EllSweep>(cfg.ell))
        throw config_error("sweep expects ell_sweep in the config");
    const std::vector<ResultRow> rows = run(cfg);
    print_rows(rows, o.bits);
    emit_rows(cfg, rows);
    return exit_ok;
}

int cmd_converge(const CommonOpts& o) {
    RunConfig cfg = make_config(o);
    const auto* p = std::get_if<Su11Params>(&cfg.model);
    if (!p) throw config_error("converge applies to the su11 model only");
    const auto* ell = std::get_if<std::size_t>(&cfg.ell);
    if (!ell) throw config_error("converge expects a single ell in the config");

    const ConvergenceResult res = converge_su11(*p, *ell, cfg.tolerances);
    for (const ConvergenceStep& s : res.trace)
        std::cout << "window=" << s.window << " S1=" << format_double(s.S1)
                  << " [T,C]=" << format_double(s.commutator_residual)
                  << " dC=" << format_double(s.window_change)
                  << " dS1=" << format_double(s.entropy_change) << "\n";
    print_rows({res.row}, o.bits);

    if (cfg.output) {
        if (cfg.output->format == OutputFormat::csv) {
            write_file(cfg.output->path, rows_to_csv({res.row}));
        } else {
            nlohmann::ordered_json doc = rows_to_json({res.row});
            nlohmann::ordered_json trace = nlohmann::ordered_json::array();
            for (const ConvergenceStep& s : res.trace) {
                nlohmann::ordered_json j;
                j["window"] = s.window;
                j["S1"] = s.S1;
                j["commutator_residual"] =
                    std::isnan(s.commutator_residual)
                        ? nlohmann::ordered_json(nullptr)
                        : nlohmann::ordered_json(s.commutator_residual);
                trace.push_back(std::move(j));
            }
            doc["trace"] = std::move(trace);
            write_file(cfg.output->path, doc.dump(2) + "\n");
        }
    }
    return exit_ok;
}

int cmd_bench(const CommonOpts& o) {
    RunConfig cfg = make_config(o);
    const auto* ell = std::get_if<std::size_t>(&cfg.ell);
    if (!ell) throw config_error("bench expects a single ell in the config");

    const ConditioningReport rep = bench_conditioning(cfg, *ell);
    std::cout << conditioning_json(rep).dump(2) << "\n";
    if (cfg.output) {
        if (cfg.output->format == OutputFormat::csv)
            write_file(cfg.output->path, conditioning_csv(rep));
        else
            write_file(cfg.output->path, conditioning_json(rep).dump(2) + "\n");
    }
    return exit_ok;
}

int cmd_verify(const CommonOpts& o) {
    RunConfig cfg = make_config(o);
    const std::vector<VerifyItem> items = verify_config(cfg, o.seed);
    bool all = true;
    for (const VerifyItem& it : items) {
        std::cout << (it.passed ? "[PASS] " : "[FAIL] ") << it.name << ": " << it.detail
                  << "\n";
        all = all && it.passed;
    }
    std::cout << (all ? "verify: all checks passed\n" : "verify: FAILURES present\n");
    return all ? exit_ok : exit_numerical;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"entanglement of free-fermion chains via commuting tridiagonal operators"};
    app.require_subcommand(1);

    CommonOpts opts;
    auto* spectrum = app.add_subcommand("spectrum", "chain spectrum and analytic check");
    auto* entropy = app.add_subcommand("entropy", "entanglement entropy at a single ell");
    auto* sweep = app.add_subcommand("sweep", "entropy over a range of ell");
    auto* converge = app.add_subcommand("converge", "su(1,1) truncation convergence study");
    auto* bench = app.add_subcommand("bench", "conditioning benchmark: direct vs commutant");
    auto* verify = app.add_subcommand("verify", "run the invariant suite on a config");
    for (CLI::App* c : {spectrum, entropy, sweep, converge, bench, verify})
        add_common(c, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_config;
    }

    try {
        if (spectrum->parsed()) return cmd_spectrum(opts);
        if (entropy->parsed()) return cmd_entropy(opts);
        if (sweep->parsed()) return cmd_sweep(opts);
        if (converge->parsed()) return cmd_converge(opts);
        if (bench->parsed()) return cmd_bench(opts);
        if (verify->parsed()) return cmd_verify(opts);
    } catch (const nonconvergence_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        for (const ConvergenceStep& s : e.trace)
            std::cerr << "  window=" << s.window << " S1=" << format_double(s.S1)
                      << " dC=" << format_double(s.window_change) << "\n";
        return exit_nonconvergence;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const physics_error& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return exit_physics;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    }
    return exit_ok;
}
