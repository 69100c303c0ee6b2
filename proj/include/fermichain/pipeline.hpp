#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fermichain/chain.hpp"
#include "fermichain/entanglement.hpp"
#include "fermichain/errors.hpp"
#include "fermichain/ground_state.hpp"
#include "fermichain/heun.hpp"

namespace fermichain {

struct Tolerances {
    double zero_tol = 1e-10;
    double clamp_eps = 1e-15;
    double commutator_tol = 1e-8;
};

enum class OutputFormat { csv, json };

struct OutputSpec {
    OutputFormat format = OutputFormat::csv;
    std::string path;
};

struct EllSweep {
    std::size_t start = 0;
    std::size_t end = 0;
    std::size_t step = 1;
};

// User-defined chain: couplings plus an explicit diagonal bispectral partner.
// No closed forms are available, so it forfeits the closed-form cross-checks.
struct CustomChain {
    ChainSpec chain;
    std::vector<double> lambda;
    double lambda_next = 0.0;
};

enum class MethodChoice { via_commutant, direct, both };

struct RunConfig {
    std::variant<Su2Params, Su11Params, SoQ3Params, CustomChain> model;
    std::variant<std::size_t, EllSweep> ell;
    MethodChoice method = MethodChoice::via_commutant;
    Tolerances tolerances;
    std::optional<OutputSpec> output;
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

struct ResultRow {
    std::size_t ell = 0;
    std::size_t K = 0;
    double S1_nats = 0.0;
    double commutator_residual = 0.0; // NaN on the direct path
    double max_rayleigh_residual = 0.0;
    std::string method;
    std::optional<std::vector<double>> nu;
    std::optional<std::vector<double>> epsilon;
    double wall_time_ms = 0.0;
    std::vector<std::string> flags;
};

// Model + spectral data shared by every ell of a sweep.
struct PipelineState {
    Model model;
    bool gauged = false;        // complex custom couplings gauged to real
    bool uniform_chain = false; // so_q(3) at rep_dim = root_order-2
    Spectrum spectrum;
    FermiData fermi;
    CorrelationFull correlation;
};

PipelineState build_pipeline(const RunConfig& cfg);
// Same, overriding the su(1,1) window size (used by the convergence loop).
PipelineState build_pipeline_sized(const RunConfig& cfg, std::size_t su11_sites);

// Full pipeline: chain -> spectrum -> Fermi sea -> correlation -> chop ->
// commutant -> entanglement report, one row per (ell, method), ascending ell,
// via_commutant before direct.
std::vector<ResultRow> run(const RunConfig& cfg);

struct ConvergenceStep {
    std::size_t window = 0; // truncation size (sites)
    double S1 = 0.0;
    double commutator_residual = 0.0;
    double window_change = 0.0;  // max |C_window - previous| (NaN on first step)
    double entropy_change = 0.0; // |S1 - previous| (NaN on first step)
};

struct nonconvergence_error : numerical_error {
    nonconvergence_error(const std::string& what, std::vector<ConvergenceStep> t)
        : numerical_error(what), trace(std::move(t)) {}
    std::vector<ConvergenceStep> trace;
};

struct ConvergenceResult {
    ResultRow row;
    std::vector<ConvergenceStep> trace;
};

// Grow the su(1,1) window by truncation.growth_factor until both the
// (ell+1)^2 correlation window and S1 move by no more than window_tol.
ConvergenceResult converge_su11(const Su11Params& p, std::size_t ell,
                                const Tolerances& tol = {});

struct ConditioningReport {
    std::size_t sites = 0;
    std::size_t ell = 0;
    std::size_t K = 0;
    std::size_t clustered_count = 0; // direct-path nu within 1e-12 of {0,1}
    double min_gap_direct = 0.0;     // smallest positive gap between computed nu
    double t_min_gap = 0.0;
    double t_min_gap_rel = 0.0; // relative to max_row_norm(T)
    double max_rayleigh_residual = 0.0;
    double commutator_residual = 0.0;
    bool near_reducible = false;
    bool valid = false;
    double wall_time_direct_ms = 0.0;
    double wall_time_via_ms = 0.0;
    std::vector<double> nu_direct, nu_via, t_values, rayleigh_residuals;
};

// Side-by-side study of the two routes on one instance.  mu_perturbation
// shifts the Heun parameter mu away from the commuting value (negative
// control); the run is then marked invalid.
ConditioningReport bench_conditioning(const RunConfig& cfg, std::size_t ell,
                                      double mu_perturbation = 0.0);

std::string conditioning_csv(const ConditioningReport& rep);
nlohmann::ordered_json conditioning_json(const ConditioningReport& rep);

// Serialization.  Doubles are printed as shortest round-trip decimals in both
// formats; NaN becomes "nan" in CSV and null in JSON.
std::string format_double(double v);
std::string rows_to_csv(const std::vector<ResultRow>& rows);
nlohmann::ordered_json rows_to_json(const std::vector<ResultRow>& rows);
std::vector<ResultRow> rows_from_json(const nlohmann::json& doc);
std::vector<ResultRow> rows_from_csv(const std::string& text);

struct VerifyItem {
    std::string name;
    bool passed = false;
    std::string detail;
};

// Invariant suite over one configured model; `seed` drives the randomized
// negative controls.
std::vector<VerifyItem> verify_config(const RunConfig& cfg, std::uint64_t seed);

} // namespace fermichain
