#include "fermichain/pipeline.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "fermichain/spectral.hpp"

namespace fermichain {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double quiet_nan = std::numeric_limits<double>::quiet_NaN();

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

const json& require(const json& doc, const char* key, const char* where) {
    auto it = doc.find(key);
    if (it == doc.end())
        throw config_error(std::string(where) + ": missing required field '" + key + "'");
    return *it;
}

double get_num(const json& j, const char* what) {
    if (!j.is_number()) throw config_error(std::string(what) + " must be a number");
    return j.get<double>();
}

std::int64_t get_int(const json& j, const char* what) {
    if (!j.is_number_integer()) throw config_error(std::string(what) + " must be an integer");
    return j.get<std::int64_t>();
}

std::size_t get_size(const json& j, const char* what) {
    const std::int64_t v = get_int(j, what);
    if (v < 0) throw config_error(std::string(what) + " must be non-negative");
    return static_cast<std::size_t>(v);
}

TruncationConfig parse_truncation(const json& j) {
    TruncationConfig t;
    if (j.contains("initial_size")) t.initial_size = get_size(j["initial_size"], "truncation.initial_size");
    if (j.contains("growth_factor")) t.growth_factor = get_num(j["growth_factor"], "truncation.growth_factor");
    if (j.contains("window_tol")) t.window_tol = get_num(j["window_tol"], "truncation.window_tol");
    if (j.contains("max_size")) t.max_size = get_size(j["max_size"], "truncation.max_size");
    if (t.initial_size == 0 || t.initial_size > t.max_size)
        throw config_error("truncation: require 0 < initial_size <= max_size");
    if (t.growth_factor <= 1.0) throw config_error("truncation.growth_factor must be > 1");
    if (t.window_tol <= 0.0) throw config_error("truncation.window_tol must be > 0");
    return t;
}

CustomChain parse_custom(const json& j) {
    CustomChain cc;
    const json& fb = require(j, "fields_B", "custom model");
    const json& hj = require(j, "hoppings_J", "custom model");
    const json& lm = require(j, "lambda", "custom model");
    if (!fb.is_array() || !hj.is_array() || !lm.is_array())
        throw config_error("custom model: fields_B, hoppings_J and lambda must be arrays");
    for (const auto& x : fb) cc.chain.fields_B.push_back(get_num(x, "fields_B entry"));
    for (const auto& x : hj) {
        if (x.is_number()) {
            cc.chain.hoppings_J.emplace_back(x.get<double>(), 0.0);
        } else if (x.is_array() && x.size() == 2) {
            cc.chain.hoppings_J.emplace_back(get_num(x[0], "hoppings_J re"),
                                             get_num(x[1], "hoppings_J im"));
        } else {
            throw config_error("hoppings_J entries must be numbers or [re, im] pairs");
        }
    }
    const std::size_t sites = cc.chain.sites();
    if (sites == 0) throw config_error("custom model: empty chain");
    if (cc.chain.hoppings_J.size() + 1 != sites)
        throw config_error("custom model: hoppings_J must have sites-1 entries");

    std::vector<double> lambda;
    for (const auto& x : lm) lambda.push_back(get_num(x, "lambda entry"));
    if (lambda.size() == sites + 1) {
        cc.lambda_next = lambda.back();
        lambda.pop_back();
    } else if (lambda.size() == sites && j.contains("lambda_next")) {
        cc.lambda_next = get_num(j["lambda_next"], "lambda_next");
    } else {
        throw config_error(
            "custom model: lambda must have sites+1 entries (or sites entries plus lambda_next)");
    }
    cc.lambda = std::move(lambda);
    for (std::size_t a = 0; a < cc.lambda.size(); ++a)
        for (std::size_t b = a + 1; b < cc.lambda.size(); ++b)
            if (cc.lambda[a] == cc.lambda[b])
                throw config_error("custom model: lambda entries must be pairwise distinct");
    return cc;
}

MethodChoice parse_method(const std::string& s) {
    if (s == "via_commutant" || s == "via-commutant") return MethodChoice::via_commutant;
    if (s == "direct") return MethodChoice::direct;
    if (s == "both") return MethodChoice::both;
    throw config_error("method must be via-commutant, direct or both");
}

OutputFormat parse_format(const std::string& s) {
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    throw config_error("output format must be csv or json");
}

const Su11Params* su11_of(const RunConfig& cfg) {
    return std::get_if<Su11Params>(&cfg.model);
}

std::string model_name(const RunConfig& cfg) {
    if (std::holds_alternative<Su2Params>(cfg.model)) return "su2";
    if (std::holds_alternative<Su11Params>(cfg.model)) return "su11";
    if (std::holds_alternative<SoQ3Params>(cfg.model)) return "soq3";
    return "custom";
}

std::size_t max_ell_allowed(const RunConfig& cfg, std::size_t sites) {
    if (su11_of(cfg)) {
        if (sites < 4) throw config_error("su11: window too small");
        return sites / 4 - 1; // keep the window a 4x safety margin past the block
    }
    return sites - 1;
}

std::vector<std::size_t> ell_list(const RunConfig& cfg, std::size_t sites) {
    const std::size_t cap = max_ell_allowed(cfg, sites);
    std::vector<std::size_t> out;
    if (const auto* single = std::get_if<std::size_t>(&cfg.ell)) {
        if (*single > cap)
            throw config_error("ell out of range for this model (max " +
                               std::to_string(cap) + ")");
        out.push_back(*single);
    } else {
        const auto& sw = std::get<EllSweep>(cfg.ell);
        if (sw.step == 0) throw config_error("ell_sweep.step must be >= 1");
        if (sw.start > sw.end) throw config_error("ell_sweep requires start <= end");
        if (sw.end > cap)
            throw config_error("ell_sweep.end out of range for this model (max " +
                               std::to_string(cap) + ")");
        for (std::size_t e = sw.start; e <= sw.end; e += sw.step) out.push_back(e);
    }
    return out;
}

} // namespace

RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw config_error("config: top level must be an object");
    RunConfig cfg;

    const json& model = require(doc, "model", "config");
    const std::string type = require(model, "type", "model").get<std::string>();
    if (type == "su2") {
        Su2Params p;
        p.two_s = static_cast<int>(get_int(require(model, "two_s", "su2"), "two_s"));
        p.theta = get_num(require(model, "theta", "su2"), "theta");
        p.b = get_num(require(model, "b", "su2"), "b");
        if (p.two_s < 1) throw config_error("su2: two_s must be >= 1");
        cfg.model = p;
    } else if (type == "su11") {
        Su11Params p;
        p.kappa = get_num(require(model, "kappa", "su11"), "kappa");
        p.theta = get_num(require(model, "theta", "su11"), "theta");
        p.b = get_num(require(model, "b", "su11"), "b");
        if (model.contains("truncation")) p.truncation = parse_truncation(model["truncation"]);
        if (p.kappa <= 0.0) throw config_error("su11: kappa must be > 0");
        cfg.model = p;
    } else if (type == "soq3") {
        SoQ3Params p;
        p.root_order =
            static_cast<int>(get_int(require(model, "root_order", "soq3"), "root_order"));
        p.rep_dim = static_cast<int>(get_int(require(model, "rep_dim", "soq3"), "rep_dim"));
        p.b = get_num(require(model, "b", "soq3"), "b");
        if (p.root_order < 2) throw config_error("soq3: root_order must be >= 2");
        if (p.rep_dim < 1 || p.rep_dim > p.root_order - 1)
            throw config_error("soq3: require 1 <= rep_dim <= root_order-1");
        cfg.model = p;
    } else if (type == "custom") {
        cfg.model = parse_custom(model);
    } else {
        throw config_error("model.type must be su2, su11, soq3 or custom");
    }

    const bool has_ell = doc.contains("ell");
    const bool has_sweep = doc.contains("ell_sweep");
    if (has_ell == has_sweep)
        throw config_error("config: exactly one of ell / ell_sweep must be present");
    if (has_ell) {
        cfg.ell = get_size(doc["ell"], "ell");
    } else {
        const json& sw = doc["ell_sweep"];
        EllSweep e;
        e.start = get_size(require(sw, "start", "ell_sweep"), "ell_sweep.start");
        e.end = get_size(require(sw, "end", "ell_sweep"), "ell_sweep.end");
        e.step = sw.contains("step") ? get_size(sw["step"], "ell_sweep.step") : 1;
        cfg.ell = e;
    }

    if (doc.contains("method")) cfg.method = parse_method(doc["method"].get<std::string>());
    if (doc.contains("tolerances")) {
        const json& t = doc["tolerances"];
        if (t.contains("zero_tol")) cfg.tolerances.zero_tol = get_num(t["zero_tol"], "zero_tol");
        if (t.contains("clamp_eps"))
            cfg.tolerances.clamp_eps = get_num(t["clamp_eps"], "clamp_eps");
        if (t.contains("commutator_tol"))
            cfg.tolerances.commutator_tol = get_num(t["commutator_tol"], "commutator_tol");
    }
    if (doc.contains("output")) {
        const json& o = doc["output"];
        OutputSpec spec;
        spec.format = parse_format(require(o, "format", "output").get<std::string>());
        spec.path = require(o, "path", "output").get<std::string>();
        cfg.output = spec;
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw config_error("config parse error in " + path + ": " + e.what());
    }
    return parse_config(doc);
}

PipelineState build_pipeline_sized(const RunConfig& cfg, std::size_t su11_sites) {
    PipelineState st;
    if (const auto* p = std::get_if<Su2Params>(&cfg.model)) {
        st.model = su2_chain(*p);
    } else if (const auto* p = std::get_if<Su11Params>(&cfg.model)) {
        st.model = su11_chain_sized(*p, su11_sites ? su11_sites : p->truncation.initial_size);
    } else if (const auto* p = std::get_if<SoQ3Params>(&cfg.model)) {
        st.model = soq3_chain(*p);
        st.uniform_chain = (p->rep_dim == p->root_order - 2);
    } else {
        const auto& cc = std::get<CustomChain>(cfg.model);
        st.model.chain = cc.chain;
        st.model.bispectral.lambda = cc.lambda;
        st.model.bispectral.lambda_next = cc.lambda_next;
        if (!st.model.chain.is_real()) {
            // Complex couplings: gauge away the hopping phases.  The diagonal
            // partner X is gauge-invariant, and so are the correlation
            // spectrum and the entropy.
            GaugeResult g = gauge_to_real(build_hamiltonian(st.model.chain));
            for (std::size_t i = 0; i < g.matrix.off.size(); ++i)
                st.model.chain.hoppings_J[i] = g.matrix.off[i];
            st.gauged = true;
        }
    }

    const HermitianTridiagonal h = build_hamiltonian(st.model.chain);
    st.spectrum = eig_tridiagonal(as_symmetric(h));
    try {
        st.fermi = fermi_index(st.spectrum, cfg.tolerances.zero_tol);
    } catch (const physics_error& e) {
        throw physics_error("model '" + model_name(cfg) + "': " + e.what());
    }

    // Commutant parameters use analytic mode energies where the model provides
    // them (exact for the finite families; for su(1,1) this isolates the
    // truncation error to the correlation matrix).
    if (st.model.bispectral.analytic_omega) {
        const auto& w = *st.model.bispectral.analytic_omega;
        if (st.fermi.K + 1 < w.size()) {
            const double scale = std::max(1.0, std::abs(w[st.fermi.K]));
            if (std::abs(w[st.fermi.K] - st.fermi.omega_K) > 1e-6 * scale ||
                std::abs(w[st.fermi.K + 1] - st.fermi.omega_K1) > 1e-6 * scale)
                throw numerical_error(
                    "pipeline: computed spectrum disagrees with the analytic one");
            st.fermi.omega_K = w[st.fermi.K];
            st.fermi.omega_K1 = w[st.fermi.K + 1];
        }
    }

    st.correlation = full_correlation(st.spectrum, st.fermi);
    return st;
}

PipelineState build_pipeline(const RunConfig& cfg) { return build_pipeline_sized(cfg, 0); }

namespace {

ResultRow make_row(const PipelineState& st, std::size_t ell, const EntanglementReport& rep,
                   double elapsed_ms) {
    ResultRow row;
    row.ell = ell;
    row.K = st.fermi.K;
    row.S1_nats = rep.entropy;
    row.commutator_residual = rep.commutator_residual;
    double rmax = 0.0;
    for (double r : rep.residuals) rmax = std::max(rmax, r);
    row.max_rayleigh_residual = rmax;
    row.method = std::string(method_name(rep.method));
    row.nu = rep.nu;
    row.epsilon = rep.epsilon;
    row.wall_time_ms = elapsed_ms;
    if (st.uniform_chain) row.flags.push_back("uniform-chain");
    if (st.gauged) row.flags.push_back("gauged");
    return row;
}

} // namespace

std::vector<ResultRow> run(const RunConfig& cfg) {
    PipelineState st = build_pipeline(cfg);
    const std::vector<std::size_t> ells = ell_list(cfg, st.model.chain.sites());

    std::vector<ResultRow> rows;
    for (std::size_t ell : ells) {
        const CorrelationChopped cc = chop(st.correlation, ell);
        const bool want_via = cfg.method != MethodChoice::direct;
        const bool want_direct = cfg.method != MethodChoice::via_commutant;

        std::optional<ResultRow> via_row, direct_row;
        if (want_via) {
            const double t0 = now_ms();
            CommutantT ct = commutant_matrix(st.model, st.fermi, ell);
            if (ct.near_reducible) {
                // A (near-)reducible T cannot separate the spectrum; take the
                // dense path and say so.
                EntanglementReport rep = c_spectrum_direct(cc, cfg.tolerances.clamp_eps);
                ResultRow row = make_row(st, ell, rep, now_ms() - t0);
                row.flags.push_back("near-reducible-fallback");
                direct_row = std::move(row);
            } else {
                EntanglementReport rep = c_spectrum_via_commutant(
                    ct, cc, cfg.tolerances.commutator_tol, cfg.tolerances.clamp_eps);
                via_row = make_row(st, ell, rep, now_ms() - t0);
            }
        }
        if (want_direct && !direct_row) {
            const double t0 = now_ms();
            EntanglementReport rep = c_spectrum_direct(cc, cfg.tolerances.clamp_eps);
            direct_row = make_row(st, ell, rep, now_ms() - t0);
        }

        if (via_row && direct_row &&
            std::abs(via_row->S1_nats - direct_row->S1_nats) > 1e-6) {
            via_row->flags.push_back("method-mismatch");
            direct_row->flags.push_back("method-mismatch");
        }
        if (via_row) rows.push_back(std::move(*via_row));
        if (direct_row) rows.push_back(std::move(*direct_row));
    }
    return rows;
}

ConvergenceResult converge_su11(const Su11Params& p, std::size_t ell, const Tolerances& tol) {
    if (4 * (ell + 1) > p.truncation.initial_size)
        throw config_error("converge_su11: require ell+1 <= truncation.initial_size/4");

    RunConfig cfg;
    cfg.model = p;
    cfg.ell = ell;
    cfg.tolerances = tol;

    std::vector<ConvergenceStep> trace;
    Eigen::MatrixXd prev_window;
    double prev_s1 = quiet_nan;

    std::size_t sites = p.truncation.initial_size;
    while (true) {
        PipelineState st = build_pipeline_sized(cfg, sites);
        const CorrelationChopped cc = chop(st.correlation, ell);
        CommutantT ct = commutant_matrix(st.model, st.fermi, ell);

        ConvergenceStep step;
        step.window = sites;
        if (ct.near_reducible) {
            step.S1 = c_spectrum_direct(cc, tol.clamp_eps).entropy;
            step.commutator_residual = quiet_nan;
        } else {
            EntanglementReport rep = c_spectrum_via_commutant_unchecked(ct, cc, tol.clamp_eps);
            step.S1 = rep.entropy;
            step.commutator_residual = rep.commutator_residual;
        }
        step.window_change =
            prev_window.size() ? (cc.entries - prev_window).cwiseAbs().maxCoeff() : quiet_nan;
        step.entropy_change = std::isnan(prev_s1) ? quiet_nan : std::abs(step.S1 - prev_s1);
        trace.push_back(step);

        const bool converged = prev_window.size() &&
                               step.window_change <= p.truncation.window_tol &&
                               step.entropy_change <= p.truncation.window_tol;
        if (converged) {
            const double t0 = now_ms();
            EntanglementReport rep;
            if (ct.near_reducible)
                rep = c_spectrum_direct(cc, tol.clamp_eps);
            else
                rep = c_spectrum_via_commutant(ct, cc, tol.commutator_tol, tol.clamp_eps);
            ResultRow row = make_row(st, ell, rep, now_ms() - t0);
            if (ct.near_reducible) row.flags.push_back("near-reducible-fallback");
            row.flags.push_back("window:" + std::to_string(sites));
            return ConvergenceResult{std::move(row), std::move(trace)};
        }

        prev_window = cc.entries;
        prev_s1 = step.S1;
        const double grown = std::ceil(static_cast<double>(sites) * p.truncation.growth_factor);
        sites = static_cast<std::size_t>(grown);
        if (sites > p.truncation.max_size)
            throw nonconvergence_error(
                "converge_su11: window reached max_size without stabilizing", std::move(trace));
    }
}

ConditioningReport bench_conditioning(const RunConfig& cfg, std::size_t ell,
                                      double mu_perturbation) {
    PipelineState st = build_pipeline(cfg);
    const std::size_t sites = st.model.chain.sites();
    if (ell >= sites) throw config_error("bench_conditioning: ell out of range");
    const CorrelationChopped cc = chop(st.correlation, ell);

    ConditioningReport rep;
    rep.sites = sites;
    rep.ell = ell;
    rep.K = st.fermi.K;

    double t0 = now_ms();
    const EntanglementReport direct = c_spectrum_direct(cc, cfg.tolerances.clamp_eps);
    rep.wall_time_direct_ms = now_ms() - t0;
    rep.nu_direct = direct.nu;
    for (double v : direct.nu)
        if (std::min(v, 1.0 - v) <= 1e-12) ++rep.clustered_count;
    rep.min_gap_direct = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < direct.nu.size(); ++k) {
        const double gap = direct.nu[k + 1] - direct.nu[k];
        if (gap > 0.0) rep.min_gap_direct = std::min(rep.min_gap_direct, gap);
    }
    if (!std::isfinite(rep.min_gap_direct)) rep.min_gap_direct = 0.0;

    t0 = now_ms();
    CommutantT ct = commutant_matrix(st.model, st.fermi, ell);
    if (mu_perturbation != 0.0) {
        for (std::size_t n = 0; n <= ell; ++n)
            ct.matrix.diag[n] += mu_perturbation * st.model.bispectral.lambda[n];
        ct.params.mu += mu_perturbation;
    }
    rep.near_reducible = ct.near_reducible;
    const Spectrum ts = eig_tridiagonal(ct.matrix);
    rep.t_values = ts.values;
    rep.t_min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < ts.size(); ++k)
        rep.t_min_gap = std::min(rep.t_min_gap, ts.values[k + 1] - ts.values[k]);
    if (!std::isfinite(rep.t_min_gap)) rep.t_min_gap = 0.0;
    const double t_scale = max_row_norm(ct.matrix);
    rep.t_min_gap_rel = t_scale > 0.0 ? rep.t_min_gap / t_scale : 0.0;

    const EntanglementReport via =
        c_spectrum_via_commutant_unchecked(ct, cc, cfg.tolerances.clamp_eps);
    rep.wall_time_via_ms = now_ms() - t0;
    rep.nu_via = via.nu;
    rep.rayleigh_residuals = via.residuals;
    rep.commutator_residual = via.commutator_residual;
    for (double r : via.residuals)
        rep.max_rayleigh_residual = std::max(rep.max_rayleigh_residual, r);
    rep.valid = !rep.near_reducible &&
                rep.commutator_residual <= cfg.tolerances.commutator_tol &&
                rep.max_rayleigh_residual <= 1e-8;
    return rep;
}

// ---------------------------------------------------------------------------
// Serialization

std::string format_double(double v) {
    std::array<char, 64> buf;
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), p);
}

namespace {

double parse_double(std::string_view s, const char* what) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last)
        throw config_error(std::string("cannot parse number in ") + what);
    return v;
}

json double_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

double json_double(const json& j) {
    if (j.is_null()) return quiet_nan;
    return j.get<double>();
}

} // namespace

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
    std::string out = "ell,K,S1,commutator_residual,max_rayleigh_residual,method,wall_time_ms\n";
    for (const ResultRow& r : rows) {
        out += std::to_string(r.ell);
        out += ',';
        out += std::to_string(r.K);
        out += ',';
        out += format_double(r.S1_nats);
        out += ',';
        out += format_double(r.commutator_residual);
        out += ',';
        out += format_double(r.max_rayleigh_residual);
        out += ',';
        out += r.method;
        out += ',';
        out += format_double(r.wall_time_ms);
        out += '\n';
    }
    return out;
}

ordered_json rows_to_json(const std::vector<ResultRow>& rows) {
    ordered_json arr = ordered_json::array();
    for (const ResultRow& r : rows) {
        ordered_json j;
        j["ell"] = r.ell;
        j["K"] = r.K;
        j["S1_nats"] = r.S1_nats;
        j["commutator_residual"] = double_or_null(r.commutator_residual);
        j["max_rayleigh_residual"] = r.max_rayleigh_residual;
        j["method"] = r.method;
        if (r.nu) j["nu"] = *r.nu;
        if (r.epsilon) j["epsilon"] = *r.epsilon;
        j["wall_time_ms"] = r.wall_time_ms;
        j["flags"] = r.flags;
        arr.push_back(std::move(j));
    }
    ordered_json doc;
    doc["rows"] = std::move(arr);
    return doc;
}

std::vector<ResultRow> rows_from_json(const json& doc) {
    const json& arr = doc.is_array() ? doc : require(doc, "rows", "result document");
    std::vector<ResultRow> rows;
    for (const json& j : arr) {
        ResultRow r;
        r.ell = j.at("ell").get<std::size_t>();
        r.K = j.at("K").get<std::size_t>();
        r.S1_nats = json_double(j.at("S1_nats"));
        r.commutator_residual = json_double(j.at("commutator_residual"));
        r.max_rayleigh_residual = json_double(j.at("max_rayleigh_residual"));
        r.method = j.at("method").get<std::string>();
        if (j.contains("nu")) r.nu = j["nu"].get<std::vector<double>>();
        if (j.contains("epsilon")) r.epsilon = j["epsilon"].get<std::vector<double>>();
        r.wall_time_ms = json_double(j.at("wall_time_ms"));
        if (j.contains("flags")) r.flags = j["flags"].get<std::vector<std::string>>();
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ResultRow> rows_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw config_error("rows_from_csv: empty input");
    if (line != "ell,K,S1,commutator_residual,max_rayleigh_residual,method,wall_time_ms")
        throw config_error("rows_from_csv: unexpected header");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::array<std::string, 7> f;
        std::size_t pos = 0;
        for (int i = 0; i < 7; ++i) {
            const std::size_t next = line.find(',', pos);
            if (i < 6 && next == std::string::npos)
                throw config_error("rows_from_csv: short row");
            f[static_cast<std::size_t>(i)] =
                line.substr(pos, next == std::string::npos ? next : next - pos);
            pos = next + 1;
        }
        ResultRow r;
        r.ell = static_cast<std::size_t>(std::stoull(f[0]));
        r.K = static_cast<std::size_t>(std::stoull(f[1]));
        r.S1_nats = parse_double(f[2], "S1");
        r.commutator_residual = parse_double(f[3], "commutator_residual");
        r.max_rayleigh_residual = parse_double(f[4], "max_rayleigh_residual");
        r.method = f[5];
        r.wall_time_ms = parse_double(f[6], "wall_time_ms");
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string conditioning_csv(const ConditioningReport& rep) {
    std::string out = "k,nu_direct,dist01_direct,nu_via,rayleigh_residual,t_value\n";
    for (std::size_t k = 0; k < rep.nu_direct.size(); ++k) {
        const double nd = rep.nu_direct[k];
        out += std::to_string(k);
        out += ',';
        out += format_double(nd);
        out += ',';
        out += format_double(std::min(nd, 1.0 - nd));
        out += ',';
        out += format_double(k < rep.nu_via.size() ? rep.nu_via[k] : quiet_nan);
        out += ',';
        out += format_double(k < rep.rayleigh_residuals.size() ? rep.rayleigh_residuals[k]
                                                               : quiet_nan);
        out += ',';
        out += format_double(k < rep.t_values.size() ? rep.t_values[k] : quiet_nan);
        out += '\n';
    }
    return out;
}

ordered_json conditioning_json(const ConditioningReport& rep) {
    ordered_json j;
    j["sites"] = rep.sites;
    j["ell"] = rep.ell;
    j["K"] = rep.K;
    j["clustered_count"] = rep.clustered_count;
    j["min_gap_direct"] = double_or_null(rep.min_gap_direct);
    j["t_min_gap"] = rep.t_min_gap;
    j["t_min_gap_rel"] = rep.t_min_gap_rel;
    j["max_rayleigh_residual"] = rep.max_rayleigh_residual;
    j["commutator_residual"] = double_or_null(rep.commutator_residual);
    j["near_reducible"] = rep.near_reducible;
    j["valid"] = rep.valid;
    j["wall_time_direct_ms"] = rep.wall_time_direct_ms;
    j["wall_time_via_ms"] = rep.wall_time_via_ms;
    return j;
}

// ---------------------------------------------------------------------------
// Invariant suite

namespace {

std::vector<std::size_t> spread_grid(std::size_t max_ell, std::size_t want) {
    std::set<std::size_t> s;
    if (want < 2) want = 2;
    for (std::size_t i = 0; i < want; ++i)
        s.insert((max_ell * i) / (want - 1));
    return {s.begin(), s.end()};
}

struct Suite {
    std::vector<VerifyItem> items;

    void add(const std::string& name, bool ok, const std::string& detail) {
        items.push_back({name, ok, detail});
    }
};

double heun_scale(const PositionTridiagonal& t) {
    double s = 0.0;
    for (double d : t.diag) s = std::max(s, std::abs(d));
    for (const cplx& v : t.super) s = std::max(s, std::abs(v));
    for (const cplx& v : t.sub) s = std::max(s, std::abs(v));
    return s;
}

// v^T T w for the real part of a position tridiagonal (real chains).
double bilinear(const PositionTridiagonal& t, const Eigen::VectorXd& v,
                const Eigen::VectorXd& w) {
    const auto n = static_cast<Eigen::Index>(t.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        double row = t.diag[u] * w(i);
        if (i > 0) row += t.sub[u - 1].real() * w(i - 1);
        if (i + 1 < n) row += t.super[u].real() * w(i + 1);
        acc += v(i) * row;
    }
    return acc;
}

} // namespace

std::vector<VerifyItem> verify_config(const RunConfig& cfg, std::uint64_t seed) {
    Suite suite;
    PipelineState st = build_pipeline(cfg);
    const std::size_t sites = st.model.chain.sites();
    const bool is_su11 = su11_of(cfg) != nullptr;
    const bool finite_exact = !is_su11 && !std::holds_alternative<CustomChain>(cfg.model);

    const HermitianTridiagonal h = build_hamiltonian(st.model.chain);
    const SymmetricTridiagonal hs = as_symmetric(h);
    const double h_norm = max_row_norm(hs);

    { // spectrum invariants
        const auto n = static_cast<Eigen::Index>(sites);
        const double ortho =
            (st.spectrum.vectors.transpose() * st.spectrum.vectors -
             Eigen::MatrixXd::Identity(n, n))
                .cwiseAbs()
                .maxCoeff();
        double resid = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            const Eigen::VectorXd col = st.spectrum.vectors.col(k);
            resid = std::max(resid, (apply(hs, col) -
                                     st.spectrum.values[static_cast<std::size_t>(k)] * col)
                                        .norm());
        }
        bool ascending = true;
        if (st.model.chain.is_irreducible())
            for (std::size_t k = 0; k + 1 < sites; ++k)
                if (!(st.spectrum.values[k] < st.spectrum.values[k + 1])) ascending = false;
        const bool ok = ortho <= 1e-12 && resid <= 1e-11 * std::max(h_norm, 1.0) && ascending;
        suite.add("spectrum-invariants", ok,
                  "orthonormality " + format_double(ortho) + ", residual " +
                      format_double(resid) + (ascending ? "" : ", ordering violated"));
    }

    if (st.model.bispectral.analytic_omega) {
        const auto& w = *st.model.bispectral.analytic_omega;
        // For the truncated semi-infinite chain only the low modes live well
        // inside the window; the high end of the finite matrix is a boundary
        // artifact.
        const std::size_t count = is_su11 ? std::min<std::size_t>(sites / 8, 12) : sites;
        double dev = 0.0;
        for (std::size_t k = 0; k < count; ++k)
            dev = std::max(dev, std::abs(w[k] - st.spectrum.values[k]));
        const double tol = is_su11 ? 1e-8 : 1e-10;
        suite.add("analytic-spectrum", dev <= tol,
                  "max deviation " + format_double(dev) + " over " + std::to_string(count) +
                      " modes (tol " + format_double(tol) + ")");
    }

    if (st.model.bispectral.dual_B && st.model.bispectral.dual_J) {
        const std::size_t k_limit = is_su11 ? sites / 8 : sites;
        const BispectralReport rep =
            verify_bispectral(st.model.chain, st.model.bispectral, st.spectrum, k_limit);
        const bool ok = rep.recurrence_residual <= 1e-10 && rep.difference_residual <= 1e-10;
        suite.add("bispectral-residuals", ok,
                  "recurrence " + format_double(rep.recurrence_residual) + ", difference " +
                      format_double(rep.difference_residual) + " (k<" +
                      std::to_string(rep.k_checked) + ")");
    }

    { // correlation projector
        const Eigen::MatrixXd& c = st.correlation.entries;
        const double idem = (c * c - c).cwiseAbs().maxCoeff();
        const double trace_dev =
            std::abs(c.trace() - static_cast<double>(st.fermi.K + 1));
        const double asym = (c - c.transpose()).cwiseAbs().maxCoeff();
        const CorrelationChopped full_block = chop(st.correlation, sites - 1);
        const double proj = projector_identity_check(st.correlation, full_block);
        const bool ok = idem <= 1e-11 && trace_dev <= 1e-9 && asym <= 1e-12 && proj == 0.0;
        suite.add("correlation-projector", ok,
                  "idempotency " + format_double(idem) + ", trace dev " +
                      format_double(trace_dev) + ", asymmetry " + format_double(asym) +
                      ", pi1.C.pi1 dev " + format_double(proj));
    }

    const std::size_t max_ell = max_ell_allowed(cfg, sites);
    std::vector<std::size_t> grid = spread_grid(max_ell, 8);
    if (const auto* single = std::get_if<std::size_t>(&cfg.ell)) {
        if (*single <= max_ell && !std::count(grid.begin(), grid.end(), *single))
            grid.push_back(*single);
        std::sort(grid.begin(), grid.end());
    }

    { // chopped spectra stay in [0,1]
        double worst = 0.0;
        for (std::size_t ell : grid) {
            const CorrelationChopped cc = chop(st.correlation, ell);
            const Spectrum s = eig_dense_hermitian(Eigen::MatrixXd(cc.entries));
            for (double v : s.values)
                worst = std::max({worst, -v, v - 1.0});
        }
        suite.add("chopped-range", worst <= 1e-10,
                  "max deviation from [0,1]: " + format_double(worst));
    }

    { // commutation + block invariance + non-degeneracy over the ell grid
        const double tol = finite_exact ? 1e-12 : cfg.tolerances.commutator_tol;
        double worst = 0.0, worst_edge = 0.0, worst_mom = 0.0;
        double min_gap = std::numeric_limits<double>::infinity();
        bool any_full = false;
        for (std::size_t ell : grid) {
            const CorrelationChopped cc = chop(st.correlation, ell);
            const CommutantT ct = commutant_matrix(st.model, st.fermi, ell);
            worst = std::max(worst, commutator_residual(ct, cc));

            const PositionTridiagonal tf =
                heun_full(st.model.bispectral, st.model.chain, ct.params);
            const double scale = std::max(heun_scale(tf), 1e-300);
            if (ell + 1 < sites)
                worst_edge = std::max(
                    worst_edge, std::abs(tf.super[ell]) / scale);
            if (st.fermi.K + 1 < sites) {
                const auto vK = st.spectrum.vectors.col(static_cast<Eigen::Index>(st.fermi.K));
                const auto vK1 =
                    st.spectrum.vectors.col(static_cast<Eigen::Index>(st.fermi.K + 1));
                worst_mom = std::max(worst_mom, std::abs(bilinear(tf, vK, vK1)) / scale);
            }
            if (!ct.near_reducible) {
                any_full = true;
                const Spectrum ts = eig_tridiagonal(ct.matrix);
                for (std::size_t k = 0; k + 1 < ts.size(); ++k)
                    min_gap = std::min(min_gap, ts.values[k + 1] - ts.values[k]);
            }
        }
        suite.add("commutation", worst <= tol,
                  "max [T,C] residual " + format_double(worst) + " (tol " + format_double(tol) +
                      ")");
        suite.add("block-invariance", worst_edge <= 1e-14 && worst_mom <= 1e-10,
                  "position edge " + format_double(worst_edge) + ", momentum edge " +
                      format_double(worst_mom) + " (relative)");
        if (any_full)
            suite.add("commutant-nondegenerate", min_gap > 0.0,
                      "min T eigenvalue gap " + format_double(min_gap));
    }

    { // closed form vs generic commutant
        const bool has_closed = finite_exact || is_su11;
        if (has_closed) {
            double worst = 0.0;
            for (std::size_t ell : grid) {
                const CommutantT generic = commutant_matrix(st.model, st.fermi, ell);
                CommutantT closed;
                if (const auto* p = std::get_if<Su2Params>(&cfg.model))
                    closed = closed_form_commutant(*p, st.fermi, ell);
                else if (const auto* p = std::get_if<Su11Params>(&cfg.model))
                    closed = closed_form_commutant(*p, st.fermi, ell);
                else
                    closed = closed_form_commutant(std::get<SoQ3Params>(cfg.model), st.fermi, ell);
                double scale = std::max(max_row_norm(generic.matrix),
                                        max_row_norm(closed.matrix));
                scale = std::max(scale, 1e-300);
                for (std::size_t n = 0; n <= ell; ++n)
                    worst = std::max(worst,
                                     std::abs(generic.matrix.diag[n] - closed.matrix.diag[n]) /
                                         scale);
                for (std::size_t n = 0; n < ell; ++n)
                    worst = std::max(
                        worst,
                        std::abs(generic.matrix.off[n] - closed.matrix.off[n]) / scale);
            }
            suite.add("closed-form-T", worst <= 1e-12,
                      "max entrywise deviation " + format_double(worst) + " (relative)");
        }
    }

    { // via-commutant vs direct
        double worst_nu = 0.0, worst_s1 = 0.0;
        bool compared = false;
        for (std::size_t ell : grid) {
            if (sites > 200) break; // dense oracle kept at desk scale
            const CorrelationChopped cc = chop(st.correlation, ell);
            const CommutantT ct = commutant_matrix(st.model, st.fermi, ell);
            if (ct.near_reducible) continue;
            const EntanglementReport via =
                c_spectrum_via_commutant(ct, cc, cfg.tolerances.commutator_tol,
                                         cfg.tolerances.clamp_eps);
            const EntanglementReport ref = c_spectrum_direct(cc, cfg.tolerances.clamp_eps);
            for (std::size_t k = 0; k < via.nu.size(); ++k)
                worst_nu = std::max(worst_nu, std::abs(via.nu[k] - ref.nu[k]));
            worst_s1 = std::max(worst_s1, std::abs(via.entropy - ref.entropy));
            compared = true;
        }
        if (compared)
            suite.add("oracle-equivalence", worst_nu <= 1e-8 && worst_s1 <= 1e-8,
                      "max |nu| deviation " + format_double(worst_nu) + ", max |S1| deviation " +
                          format_double(worst_s1));
    }

    { // randomized negative control: breaking mu must break commutation
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> mag(0.05, 0.2);
        std::size_t ell = std::min<std::size_t>(max_ell, std::max<std::size_t>(2, max_ell / 2));
        bool done = false;
        if (sites >= 3 && ell >= 1 && sites <= 400) {
            const CorrelationChopped cc = chop(st.correlation, ell);
            CommutantT ct = commutant_matrix(st.model, st.fermi, ell);
            if (!ct.near_reducible &&
                commutator_residual(ct, cc) <= cfg.tolerances.commutator_tol) {
                const double delta = mag(rng) * (rng() % 2 ? 1.0 : -1.0);
                for (std::size_t n = 0; n <= ell; ++n)
                    ct.matrix.diag[n] += delta * st.model.bispectral.lambda[n];
                ct.params.mu += delta;
                const double res = commutator_residual(ct, cc);
                const EntanglementReport rep =
                    c_spectrum_via_commutant_unchecked(ct, cc, cfg.tolerances.clamp_eps);
                double rmax = 0.0;
                for (double r : rep.residuals) rmax = std::max(rmax, r);
                suite.add("negative-control", res > 1e-6 && rmax > 1e-6,
                          "perturbed mu by " + format_double(delta) + ": [T,C] residual " +
                              format_double(res) + ", max Rayleigh residual " +
                              format_double(rmax));
                done = true;
            }
        }
        if (!done)
            suite.add("negative-control", true, "skipped (reducible or oversized instance)");
    }

    return suite.items;
}

} // namespace fermichain
