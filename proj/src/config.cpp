#include "bornrad/config.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

#include "bornrad/errors.hpp"
#include "bornrad/expression.hpp"
#include "bornrad/rng.hpp"
#include "bornrad/superadiabatic.hpp"

namespace bornrad {

using json = nlohmann::json;

namespace {

const std::set<std::string> kTasks = {"scan-adiabatic", "scan-superadiabatic", "scan-dressed", "decay",
                                      "compare",        "oracle",              "bands",        "propagate-full",
                                      "propagate-diagonal", "propagate-bo",   "transition"};

std::string where(const YAML::Node& node, const std::string& key) {
    const auto m = node.Mark();
    if (m.is_null()) return "key '" + key + "'";
    return "line " + std::to_string(m.line + 1) + ", key '" + key + "'";
}

template <class T>
T scalar(const YAML::Node& node, const std::string& key) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ParseError(where(node, key) + ": cannot read value");
    }
}

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& prefix) {
    if (!map.IsMap()) throw ParseError(where(map, prefix) + ": expected a mapping");
    for (const auto& kv : map) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) throw ParseError(where(kv.first, prefix + key) + ": unknown key");
    }
}

template <class T>
void read(const YAML::Node& map, const std::string& key, T& out, const std::string& prefix = "") {
    if (const YAML::Node v = map[key]) out = scalar<T>(v, prefix + key);
}

std::vector<double> read_list(const YAML::Node& node, const std::string& key) {
    if (!node.IsSequence()) throw ParseError(where(node, key) + ": expected a list");
    std::vector<double> out;
    for (const auto& v : node) out.push_back(scalar<double>(v, key));
    return out;
}

std::vector<std::vector<std::string>> read_matrix(const YAML::Node& node, const std::string& key) {
    if (!node.IsSequence()) throw ParseError(where(node, key) + ": expected a list of rows");
    std::vector<std::vector<std::string>> out;
    for (const auto& row : node) {
        if (!row.IsSequence()) throw ParseError(where(row, key) + ": expected a row list");
        std::vector<std::string> r;
        for (const auto& v : row) r.push_back(scalar<std::string>(v, key));
        out.push_back(std::move(r));
    }
    return out;
}

ModelConfig read_model(const YAML::Node& node) {
    ModelConfig m;
    check_keys(node,
               {"type", "length", "theta0", "theta_amp", "half_gap", "gap_mod", "phase_amp", "phase_amp2",
                "shift_amp", "levels", "dim", "hamiltonian", "hamiltonian_imag", "dipole", "dipole_imag",
                "constants", "lambda0", "band_i", "band_j"},
               "model.");
    read(node, "type", m.type, "model.");
    if (m.type != "rotation" && m.type != "constant" && m.type != "expression")
        throw ParseError(where(node["type"], "model.type") + ": expected rotation, constant or expression");
    auto& r = m.rotation;
    read(node, "length", r.length, "model.");
    read(node, "theta0", r.theta0, "model.");
    read(node, "theta_amp", r.theta_amp, "model.");
    read(node, "half_gap", r.half_gap, "model.");
    read(node, "gap_mod", r.gap_mod, "model.");
    read(node, "phase_amp", r.phase_amp, "model.");
    read(node, "phase_amp2", r.phase_amp2, "model.");
    read(node, "shift_amp", r.shift_amp, "model.");
    if (const auto v = node["levels"]) m.levels = read_list(v, "model.levels");
    read(node, "dim", m.dim, "model.");
    if (const auto v = node["hamiltonian"]) m.hamiltonian = read_matrix(v, "model.hamiltonian");
    if (const auto v = node["hamiltonian_imag"]) m.hamiltonian_imag = read_matrix(v, "model.hamiltonian_imag");
    if (const auto v = node["dipole"]) m.dipole = read_matrix(v, "model.dipole");
    if (const auto v = node["dipole_imag"]) m.dipole_imag = read_matrix(v, "model.dipole_imag");
    if (const auto v = node["constants"]) {
        if (!v.IsMap()) throw ParseError(where(v, "model.constants") + ": expected a mapping");
        for (const auto& kv : v) {
            const auto name = kv.first.as<std::string>();
            m.constants.emplace_back(name, scalar<double>(kv.second, "model.constants." + name));
        }
    }
    if (m.type == "constant") m.lambda0 = 2.0;
    if (m.type == "rotation") m.lambda0 = r.lambda0;
    read(node, "lambda0", m.lambda0, "model.");
    read(node, "band_i", m.band_i, "model.");
    read(node, "band_j", m.band_j, "model.");
    if (m.type == "constant") m.dim = static_cast<int>(m.levels.size());
    if (m.type == "rotation") m.dim = 2;
    if (m.type == "expression" && !node["dim"]) m.dim = static_cast<int>(m.hamiltonian.size());
    return m;
}

ExperimentConfig from_yaml(const YAML::Node& root) {
    ExperimentConfig c;
    if (!root || root.IsNull()) return c;
    check_keys(root,
               {"task", "model", "grid", "eps_ladder", "eps", "beta", "delta", "coupling", "modes", "scheme", "t",
                "batch", "pmax", "seed", "order", "samples", "with_t2", "unsafe_beta", "purified", "method",
                "route", "packet", "cutoff_energy", "budget"},
               "");
    read(root, "task", c.task);
    if (const auto m = root["model"]) c.model = read_model(m);
    if (const auto g = root["grid"]) {
        check_keys(g, {"n_points", "length"}, "grid.");
        read(g, "n_points", c.n_points, "grid.");
        read(g, "length", c.length, "grid.");
    }
    if (const auto v = root["eps_ladder"]) c.ladder = read_list(v, "eps_ladder");
    read(root, "eps", c.eps);
    read(root, "beta", c.beta);
    if (const auto v = root["delta"]) c.delta = scalar<double>(v, "delta");
    if (const auto v = root["coupling"]) c.coupling = scalar<double>(v, "coupling");
    read(root, "modes", c.modes);
    read(root, "scheme", c.scheme);
    read(root, "t", c.t);
    read(root, "batch", c.batch);
    read(root, "pmax", c.pmax);
    read(root, "seed", c.seed);
    read(root, "order", c.order);
    read(root, "samples", c.samples);
    read(root, "with_t2", c.with_t2);
    read(root, "unsafe_beta", c.unsafe_beta);
    read(root, "purified", c.purified);
    read(root, "method", c.method);
    read(root, "route", c.route);
    read(root, "cutoff_energy", c.cutoff_energy);
    if (const auto p = root["packet"]) {
        check_keys(p, {"x0", "momentum", "width"}, "packet.");
        read(p, "x0", c.packet.x0, "packet.");
        read(p, "momentum", c.packet.momentum, "packet.");
        read(p, "width", c.packet.width, "packet.");
    }
    if (const auto b = root["budget"]) {
        check_keys(b, {"max_state_dim", "max_work"}, "budget.");
        read(b, "max_state_dim", c.max_state_dim, "budget.");
        read(b, "max_work", c.max_work, "budget.");
    }
    return c;
}

std::map<std::string, double> constant_map(const ModelConfig& m) {
    std::map<std::string, double> out{{"pi", pi}};
    for (const auto& [k, v] : m.constants) out[k] = v;
    return out;
}

std::function<CMat(double)> expression_matrix(const std::vector<std::vector<std::string>>& re,
                                              const std::vector<std::vector<std::string>>& im, int dim,
                                              const std::map<std::string, double>& consts, const std::string& key) {
    auto parse = [&](const std::vector<std::vector<std::string>>& src, const std::string& k) {
        if (static_cast<int>(src.size()) != dim) throw ValidationError(k + " must have " + std::to_string(dim) + " rows");
        std::vector<Expression> out;
        for (const auto& row : src) {
            if (static_cast<int>(row.size()) != dim)
                throw ValidationError(k + " rows must have " + std::to_string(dim) + " entries");
            for (const auto& e : row) out.emplace_back(e, consts);
        }
        return out;
    };
    const auto er = parse(re, key);
    const auto ei = im.empty() ? std::vector<Expression>{} : parse(im, key + "_imag");
    return [er, ei, dim](double x) {
        CMat m(dim, dim);
        for (int a = 0; a < dim; ++a)
            for (int b = 0; b < dim; ++b) {
                const size_t q = static_cast<size_t>(a) * dim + b;
                m(a, b) = cplx(er[q](x), ei.empty() ? 0.0 : ei[q](x));
            }
        return m;
    };
}

json model_json(const ModelConfig& m) {
    json j;
    j["type"] = m.type;
    j["lambda0"] = m.lambda0;
    j["band_i"] = m.band_i;
    j["band_j"] = m.band_j;
    j["dim"] = m.dim;
    if (m.type == "rotation") {
        const auto& r = m.rotation;
        j["length"] = r.length;
        j["theta0"] = r.theta0;
        j["theta_amp"] = r.theta_amp;
        j["half_gap"] = r.half_gap;
        j["gap_mod"] = r.gap_mod;
        j["phase_amp"] = r.phase_amp;
        j["phase_amp2"] = r.phase_amp2;
        j["shift_amp"] = r.shift_amp;
    }
    if (m.type == "constant") j["levels"] = m.levels;
    if (m.type == "expression") {
        j["hamiltonian"] = m.hamiltonian;
        j["hamiltonian_imag"] = m.hamiltonian_imag;
    }
    j["dipole"] = m.dipole;
    j["dipole_imag"] = m.dipole_imag;
    j["constants"] = json::array();
    for (const auto& [k, v] : m.constants) j["constants"].push_back({k, v});
    return j;
}

json config_json(const ExperimentConfig& c) {
    json j;
    j["task"] = c.task;
    j["model"] = model_json(c.model);
    j["grid"] = {{"n_points", c.n_points}, {"length", c.length}};
    j["eps_ladder"] = c.ladder;
    j["eps"] = c.eps;
    j["beta"] = c.beta;
    j["delta"] = c.delta ? json(*c.delta) : json(nullptr);
    j["coupling"] = c.coupling ? json(*c.coupling) : json(nullptr);
    j["modes"] = c.modes;
    j["scheme"] = c.scheme;
    j["t"] = c.t;
    j["batch"] = c.batch;
    j["pmax"] = c.pmax;
    j["seed"] = c.seed;
    j["order"] = c.order;
    j["samples"] = c.samples;
    j["with_t2"] = c.with_t2;
    j["unsafe_beta"] = c.unsafe_beta;
    j["purified"] = c.purified;
    j["method"] = c.method;
    j["route"] = c.route;
    j["packet"] = {{"x0", c.packet.x0}, {"momentum", c.packet.momentum}, {"width", c.packet.width}};
    j["cutoff_energy"] = c.cutoff_energy;
    j["budget"] = {{"max_state_dim", c.max_state_dim}, {"max_work", c.max_work}};
    return j;
}

// --- run ---------------------------------------------------------------------

struct Context {
    const ExperimentConfig& cfg;
    ModelSpec spec;
    Grid1D grid;
    RunRecord rec;
    json results = json::object();
    std::map<std::string, std::string> files;

    void row(const std::string& method, double eps, const std::string& q, double v) {
        rec.rows.push_back({method, eps, cfg.beta, q, v});
    }
};

std::string num(double v) { return fmt::format("{:.17g}", v); }

json report_json(const ScalingReport& r) {
    json j;
    j["exponent"] = r.exponent;
    j["intercept"] = r.intercept;
    j["r_squared"] = r.r_squared;
    j["used_points"] = r.used_points;
    j["degenerate"] = r.degenerate;
    j["note"] = r.note;
    return j;
}

// Per-point rows plus the fit; a ladder containing exact zeros is reported as
// degenerate rather than failing the run.
void add_report(Context& ctx, const std::string& method, const std::string& q, const ScalingReport& in) {
    ScalingReport r = in;
    bool zero = false;
    for (const auto& p : r.ladder) zero = zero || !(p.value > 0.0);
    if (zero) {
        r = ScalingReport{};
        r.quantity = q;
        r.ladder = in.ladder;
        r.degenerate = true;
        r.note = "degenerate (values below floor " + fmt::format("{:g}", kScalingFloor) + ")";
    }
    for (const auto& p : r.ladder) ctx.row(method, p.param, q, p.value);
    ctx.row(method, 0.0, q + ".exponent", r.exponent);
    ctx.row(method, 0.0, q + ".r_squared", r.r_squared);
    ctx.results[q] = report_json(r);
    if (r.degenerate) ctx.rec.diagnostics.push_back(q + ": " + r.note);
}

ScalingReport fit_or_flag(const std::vector<ScalingPoint>& pts, const std::string& q) {
    for (const auto& p : pts)
        if (!(p.value > 0.0)) {
            ScalingReport r;
            r.quantity = q;
            r.ladder = pts;
            return r;  // add_report flags it
        }
    return fit_scaling(pts, q);
}

BatchSpec batch_spec(const ExperimentConfig& c, const std::string& purpose) {
    return BatchSpec{c.batch, c.pmax, c.packet.width, c.seed, purpose};
}

void precheck(const Context& ctx) {
    const auto& c = ctx.cfg;
    const Eigen::Index nd = static_cast<Eigen::Index>(c.n_points) * ctx.spec.dim;
    if (nd > c.max_state_dim)
        throw BudgetExceeded("molecular dimension " + std::to_string(nd) + " exceeds max_state_dim");
    static const std::set<std::string> dense = {"scan-superadiabatic", "scan-dressed", "compare", "decay",
                                                "transition"};
    if (dense.count(c.task) && static_cast<double>(nd) * nd > 4.0 * static_cast<double>(c.max_state_dim))
        throw BudgetExceeded("dense projections of size " + std::to_string(nd) + " exceed the budget");
    const bool oracle = c.task == "oracle" || c.task == "compare" || (c.task == "decay" && c.method == "oracle");
    if (oracle && nd * (c.modes + 1) > c.max_state_dim)
        throw BudgetExceeded("dressed dimension " + std::to_string(nd * (c.modes + 1)) + " exceeds max_state_dim");
}

std::vector<ScalingPoint> points(const std::vector<double>& ladder, const std::vector<double>& v) {
    std::vector<ScalingPoint> out;
    for (size_t i = 0; i < ladder.size(); ++i) out.push_back({ladder[i], v[i]});
    return out;
}

void task_scan_adiabatic(Context& ctx) {
    const auto& c = ctx.cfg;
    AdiabaticScanOptions o;
    o.t = c.t;
    o.ladder = c.ladder;
    o.batch = batch_spec(c, "adiabatic");
    ScalingReport r;
    try {
        r = adiabatic_error_scan(ctx.spec, ctx.grid, ctx.spec.band_j, o);
    } catch (const NonPositiveValue&) {
        r.ladder.clear();
        for (double e : c.ladder) r.ladder.push_back({e, 0.0});
    }
    add_report(ctx, "adiabatic", "error", r);
}

void task_scan_superadiabatic(Context& ctx) {
    const auto& c = ctx.cfg;
    SuperadiabaticScanOptions o;
    o.ladder = c.ladder;
    o.batch = batch_spec(c, "superadiabatic");
    o.cutoff_energy = c.cutoff_energy;
    const std::string m = "superadiabatic-" + std::to_string(c.order);
    const auto s = commutator_scaling_scan(ctx.spec, ctx.grid, ctx.spec.band_j, c.order, o);
    add_report(ctx, m, "distance", s.distance);
    add_report(ctx, m, "defect", s.defect);
    add_report(ctx, m, "commutator", s.commutator);
    for (size_t i = 0; i < s.purify_defect.size(); ++i) ctx.row(m, c.ladder[i], "purify_defect", s.purify_defect[i]);
    const auto orth = band_orthogonality_check(ctx.spec, ctx.grid, ctx.spec.band_i, ctx.spec.band_j, c.order, o);
    add_report(ctx, m, "orthogonality", orth);
}

void task_scan_dressed(Context& ctx) {
    const auto& c = ctx.cfg;
    DressedScanOptions o;
    o.ladder = c.ladder;
    o.beta = c.beta;
    o.modes = c.modes;
    o.scheme = parse_scheme(c.scheme);
    o.batch = batch_spec(c, "dressed");
    o.band_j = ctx.spec.band_j;
    o.cutoff_energy = c.cutoff_energy;
    o.delta_override = c.delta;
    o.unsafe_beta = c.unsafe_beta;
    const auto s = commutator_dressed_scan(ctx.spec, ctx.grid, o);
    add_report(ctx, "dressed", "distance", s.distance);
    add_report(ctx, "dressed", "defect", s.defect);
    add_report(ctx, "dressed", "commutator", s.commutator);
    add_report(ctx, "dressed", "residual", s.residual);
    for (size_t i = 0; i < s.delta.size(); ++i) ctx.row("dressed", c.ladder[i], "delta", s.delta[i]);
    ctx.results["expected"] = {{"distance", s.expected_distance},
                               {"defect", s.expected_defect},
                               {"commutator", s.expected_commutator}};
}

struct Setup {
    FiberField h_el, mu;
    BandData bi, bj;
    SpectralPtr sp;
};

Setup setup(const Context& ctx) {
    Setup s;
    s.h_el = sample_hamiltonian(ctx.spec, ctx.grid);
    s.mu = sample_dipole(ctx.spec, ctx.grid);
    s.bi = diagonalize_band(s.h_el, ctx.spec.band_i);
    s.bj = diagonalize_band(s.h_el, ctx.spec.band_j);
    s.sp = std::make_shared<Spectral>(ctx.grid);
    return s;
}

// Band-j packet; with `purified` the order-k superadiabatic projection is
// applied first.
CVec initial_state(const Context& ctx, const Setup& s, bool purified) {
    const double eps = ctx.cfg.eps;
    CVec psi = product_state(gaussian_packet(ctx.grid, ctx.cfg.packet, eps), s.bj.periodic_vectors());
    if (purified) {
        const auto q = purify(build_superadiabatic(s.h_el, s.bj, eps, ctx.cfg.order, s.sp).with_cutoff(ctx.cfg.cutoff_energy));
        psi = q.q * psi;
    }
    return psi / psi.norm();
}

void emit_curve(Context& ctx, const DecayCurve& c) {
    const std::string m = to_string(c.method);
    std::string csv = "t,probability\n";
    for (size_t k = 0; k < c.times.size(); ++k) {
        csv += num(c.times[k]) + "," + num(c.probability[k]) + "\n";
        ctx.row(m, ctx.cfg.eps, fmt::format("probability@t={:.6g}", c.times[k]), c.probability[k]);
    }
    ctx.files["curve.csv"] = csv;
    json j;
    j["method"] = m;
    j["final"] = c.final_value();
    j["note"] = c.note;
    if (c.method == DecayMethod::oracle) {
        j["norm_drift"] = c.norm_drift;
        j["dropped_weight"] = c.dropped_weight;
        ctx.row(m, ctx.cfg.eps, "norm_drift", c.norm_drift);
        ctx.row(m, ctx.cfg.eps, "dropped_weight", c.dropped_weight);
    }
    ctx.results["curve"] = j;
}

DecayCurve oracle_curve(const Context& ctx, const Setup& s, const DressingParams& prm, bool purified) {
    const auto& c = ctx.cfg;
    const PhotonModes modes = build_modes(ctx.spec.lambda0, c.modes, parse_scheme(c.scheme),
                                          nullptr);
    const DressedHamiltonian h(build_molecular_hamiltonian(s.h_el, c.eps, s.sp), build_coupling(s.h_el, s.mu, modes),
                               modes, prm.coupling);
    const CVec psi0 = initial_state(ctx, s, purified);
    OracleOptions oo;
    oo.samples = c.samples;
    oo.max_state_dim = c.max_state_dim;
    oo.max_work = c.max_work;
    oo.beta = c.beta;
    oo.purified = purified;
    CMat qi;
    if (purified)
        qi = purify(build_superadiabatic(s.h_el, s.bi, c.eps, c.order, s.sp).with_cutoff(c.cutoff_energy)).q;
    return oracle_transition(h, s.bi.projector, purified ? &qi : nullptr, psi0, c.t, oo);
}

void task_decay(Context& ctx) {
    const auto& c = ctx.cfg;
    const DecayMethod method = parse_method(c.method);
    const Setup s = setup(ctx);
    const DressingParams prm = make_dressing_params(c.eps, c.beta, c.delta, c.coupling, c.unsafe_beta);
    const double pref = prm.coupling * prm.coupling / c.eps;
    DecayCurve curve;
    switch (method) {
        case DecayMethod::theorem2: {
            DecayOptions o;
            o.samples = c.samples;
            o.route = c.route == "bo" ? BandRoute::bo : BandRoute::diagonal;
            curve = decay_probability(s.bi, s.bj, s.mu, initial_state(ctx, s, true), c.t, c.eps, pref, s.sp, o);
            break;
        }
        case DecayMethod::dyson: {
            const RVec gaps = s.bj.energies - s.bi.energies;
            const PhotonModes modes = build_modes(ctx.spec.lambda0, c.modes, parse_scheme(c.scheme), &gaps);
            const BandPropagator pi(s.bi, c.eps, *s.sp), pj(s.bj, c.eps, *s.sp);
            const auto op = build_transition_operator(s.bi, s.bj, s.mu, modes, c.eps, prm.delta, c.with_t2, *s.sp);
            const CVec psi0 = initial_state(ctx, s, true);
            curve.method = DecayMethod::dyson;
            curve.times.push_back(0.0);
            curve.probability.push_back(0.0);
            for (int k = 1; k <= c.samples; ++k) {
                const double tk = c.t * k / c.samples;
                curve.times.push_back(tk);
                curve.probability.push_back(
                    dyson_transition(op, pi, pj, modes, psi0, tk, prm.coupling, *s.sp).probability);
            }
            curve.note = c.with_t2 ? "t1+t2" : "t1";
            break;
        }
        case DecayMethod::oracle:
            curve = oracle_curve(ctx, s, prm, c.beta >= 1.0 || c.purified);
            break;
        case DecayMethod::fgr_static: {
            // Clamped nuclei at the grid point nearest the packet centre.
            const int x = static_cast<int>(std::lround(c.packet.x0 / ctx.grid.spacing())) % ctx.grid.n_points;
            const double gap = s.bj.energies[x] - s.bi.energies[x];
            const CVec dij = dipole_elements(s.bi, s.bj, s.mu);
            const double alpha = std::cbrt(prm.coupling * prm.coupling);
            curve.method = DecayMethod::fgr_static;
            for (int k = 0; k <= c.samples; ++k) {
                const double tk = c.t * k / c.samples;
                curve.times.push_back(tk);
                curve.probability.push_back(fgr_static(gap, std::abs(dij[x]), alpha, tk / c.eps));
            }
            curve.note = "clamped at x = " + num(ctx.grid.point(x));
            break;
        }
    }
    ctx.row(to_string(method), c.eps, "delta", prm.delta);
    emit_curve(ctx, curve);
}

void task_oracle(Context& ctx) {
    const auto& c = ctx.cfg;
    const Setup s = setup(ctx);
    const DressingParams prm = make_dressing_params(c.eps, c.beta, c.delta, c.coupling, c.unsafe_beta);
    emit_curve(ctx, oracle_curve(ctx, s, prm, c.purified));
}

void task_compare(Context& ctx) {
    const auto& c = ctx.cfg;
    CompareOptions o;
    o.ladder = c.ladder;
    o.beta = c.beta;
    o.modes = c.modes;
    o.scheme = parse_scheme(c.scheme);
    o.packet = c.packet;
    o.t = c.t;
    o.cutoff_energy = c.cutoff_energy;
    o.with_t2 = c.with_t2;
    o.delta_override = c.delta;
    o.coupling_override = c.coupling;
    o.unsafe_beta = c.unsafe_beta;
    o.oracle.samples = c.samples;
    o.oracle.max_state_dim = c.max_state_dim;
    o.oracle.max_work = c.max_work;
    o.decay.samples = c.samples;
    const Comparison cmp = compare_methods(ctx.spec, ctx.grid, o);
    std::vector<double> dev;
    for (const auto& r : cmp.rows) {
        ctx.row("theorem2", r.eps, "probability", r.theorem2);
        ctx.row("dyson", r.eps, "probability", r.dyson);
        ctx.row("oracle", r.eps, "probability", r.oracle);
        ctx.row("dyson", r.eps, "deviation", r.dev_dyson);
        ctx.row("oracle", r.eps, "deviation", r.dev_oracle);
        dev.push_back(r.dev_oracle);
    }
    ctx.results["oracle_monotone"] = cmp.oracle_monotone;
    ctx.results["dyson_monotone"] = cmp.dyson_monotone;
    add_report(ctx, "oracle", "deviation_fit", fit_or_flag(points(c.ladder, dev), "deviation_fit"));
}

void task_bands(Context& ctx) {
    const auto& c = ctx.cfg;
    const Setup s = setup(ctx);
    const CVec dij = dipole_elements(s.bi, s.bj, s.mu);
    const RVec a = berry_connection(s.bj, *s.sp);
    std::string csv = "x,E_j,gap,abs_D_ij,A_j\n";
    for (int x = 0; x < ctx.grid.n_points; ++x)
        csv += num(ctx.grid.point(x)) + "," + num(s.bj.energies[x]) + "," + num(s.bj.gap_profile[x]) + "," +
               num(std::abs(dij[x])) + "," + num(a[x]) + "\n";
    ctx.files["bands.csv"] = csv;
    ctx.row("bands", c.eps, "min_gap", s.bj.gap);
    ctx.row("bands", c.eps, "holonomy_phase", s.bj.holonomy_phase());
    ctx.row("bands", c.eps, "commutator_dipole_identity", commutator_dipole_identity(s.bi, s.bj, s.h_el, s.mu));
    ctx.row("bands", c.eps, "eigen_residual", eigen_residual(s.bj, s.h_el));
    ctx.results["gap_point"] = s.bj.gap_point;
}

void task_propagate(Context& ctx) {
    const auto& c = ctx.cfg;
    const Setup s = setup(ctx);
    const MolecularOperator h = build_molecular_hamiltonian(s.h_el, c.eps, s.sp);
    const CVec psi0 = initial_state(ctx, s, false);
    const std::string m = c.task.substr(std::string("propagate-").size());
    CVec psi;
    if (m == "full") {
        PropagationInfo info;
        psi = propagate_full(h, psi0, c.t, {}, &info);
        ctx.row(m, c.eps, "dt", info.dt_used);
    } else if (m == "diagonal") {
        psi = propagate_diagonal(build_diagonal_hamiltonian(h, s.bj.projector), psi0, c.t);
    } else {
        const BoEffective bo = build_bo_effective(s.bj, c.eps, s.sp);
        const CVec phi = gaussian_packet(ctx.grid, c.packet, c.eps);
        const CVec nuc = propagate_bo(bo, phi / phi.norm(), c.t);
        psi = product_state(nuc, s.bj.periodic_vectors());
        const auto hj = build_diagonal_hamiltonian(h, s.bj.projector);
        ctx.row(m, c.eps, "bo_vs_diagonal", bo_vs_diagonal_check(s.bj, hj, bo, phi / phi.norm(), c.t));
    }
    ctx.row(m, c.eps, "norm_drift", std::abs(psi.norm() - 1.0));
    ctx.row(m, c.eps, "band_population", s.bj.projector.apply(psi).squaredNorm());
    ctx.files["state.bin"] = encode_state(MolecularState{c.n_points, ctx.spec.dim, psi});
}

void task_transition(Context& ctx) {
    const auto& c = ctx.cfg;
    const Setup s = setup(ctx);
    const DressingParams prm = make_dressing_params(c.eps, c.beta, c.delta, c.coupling, c.unsafe_beta);
    const RVec gaps = s.bj.energies - s.bi.energies;
    const PhotonModes modes = build_modes(ctx.spec.lambda0, c.modes, parse_scheme(c.scheme), &gaps);
    const BandPropagator pi(s.bi, c.eps, *s.sp), pj(s.bj, c.eps, *s.sp);
    const auto op = build_transition_operator(s.bi, s.bj, s.mu, modes, c.eps, prm.delta, c.with_t2, *s.sp);
    const auto r = dyson_transition(op, pi, pj, modes, initial_state(ctx, s, true), c.t, prm.coupling, *s.sp);
    ctx.row("dyson", c.eps, "probability", r.probability);
    ctx.row("dyson", c.eps, "norm2", r.norm2);
    ctx.row("dyson", c.eps, "doubling_change", r.doubling_change);
    ctx.files["state.bin"] = encode_state(r.state);
}

// Same error type, message prefixed with the run label.
[[noreturn]] void rethrow_labelled(const Error& e, const std::string& label) {
    const std::string msg = label + std::string(e.what()).substr(e.kind().size() + 2);
#define BORNRAD_RETHROW(Name) \
    if (dynamic_cast<const Name*>(&e)) throw Name(msg);
    BORNRAD_RETHROW(DegenerateBand)
    BORNRAD_RETHROW(NonHermitianFiber)
    BORNRAD_RETHROW(DimensionMismatch)
    BORNRAD_RETHROW(ProjectorMismatch)
    BORNRAD_RETHROW(RoughFiber)
    BORNRAD_RETHROW(ResonantMode)
    BORNRAD_RETHROW(WrongSign)
    BORNRAD_RETHROW(ParseError)
    BORNRAD_RETHROW(ValidationError)
    BORNRAD_RETHROW(NonPositiveValue)
    BORNRAD_RETHROW(BudgetExceeded)
    BORNRAD_RETHROW(StepSizeTooLarge)
    BORNRAD_RETHROW(DefectTooLarge)
    BORNRAD_RETHROW(QuadratureNotConverged)
    BORNRAD_RETHROW(KrylovBreakdown)
#undef BORNRAD_RETHROW
    if (const auto* g = dynamic_cast<const GapViolation*>(&e)) throw GapViolation(msg, g->point());
    throw Error(e.kind(), e.error_class(), msg);
}

}  // namespace

bool is_scan_task(const std::string& task) { return task.rfind("scan-", 0) == 0 || task == "compare"; }

void validate_config(const ExperimentConfig& c) {
    if (!kTasks.count(c.task)) throw ValidationError("unknown task '" + c.task + "'");
    if (!c.unsafe_beta && !(c.beta > 5.0 / 6.0 && c.beta <= 4.0 / 3.0))
        throw ValidationError("beta = " + num(c.beta) + " outside (5/6, 4/3]; set unsafe_beta to override");
    if (is_scan_task(c.task) && c.ladder.size() < 3)
        throw ValidationError("eps_ladder needs at least 3 values for task " + c.task);
    for (double e : c.ladder)
        if (!(e > 0.0 && e < 1.0)) throw ValidationError("eps_ladder values must lie in (0, 1)");
    if (!(c.eps > 0.0 && c.eps < 1.0)) throw ValidationError("eps must lie in (0, 1)");
    if (c.modes < 8) throw ValidationError("modes must be at least 8");
    if (!(c.t >= 0.0)) throw ValidationError("t must be non-negative");
    if (c.batch < 1) throw ValidationError("batch must be positive");
    if (c.samples < 1) throw ValidationError("samples must be positive");
    if (c.order != 1 && c.order != 2) throw ValidationError("order must be 1 or 2");
    if (c.route != "diagonal" && c.route != "bo") throw ValidationError("route must be diagonal or bo");
    if (c.delta && !(*c.delta > 0.0)) throw ValidationError("delta must be positive");
    parse_method(c.method);
    parse_scheme(c.scheme);
    make_grid(c.n_points, c.length);
    const auto& m = c.model;
    if (m.dim < 2) throw ValidationError("model.dim must be at least 2");
    if (m.band_i < 0 || m.band_j >= m.dim || m.band_i >= m.band_j)
        throw ValidationError("need 0 <= band_i < band_j < dim");
    build_model(m);
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin, bool validate) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(origin + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    ExperimentConfig c;
    try {
        c = from_yaml(root);
    } catch (const ParseError& e) {
        throw ParseError(origin + ": " + std::string(e.what()).substr(std::string("ParseError: ").size()));
    }
    if (c.ladder.empty()) c.ladder = {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
    if (validate) validate_config(c);
    return c;
}

ExperimentConfig parse_config(const std::string& path, bool validate) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path, validate);
}

ModelSpec build_model(const ModelConfig& m) {
    const auto consts = constant_map(m);
    ModelSpec s;
    if (m.type == "rotation") {
        RotationParams r = m.rotation;
        r.lambda0 = m.lambda0;
        s = rotation_model(r);
    } else if (m.type == "constant") {
        if (m.dipole.empty() && m.dim != 2) throw ValidationError("constant model with d != 2 needs a dipole");
        s = constant_model(m.levels, m.dim == 2 ? pauli_x() : CMat::Zero(m.dim, m.dim), m.lambda0);
    } else {
        if (m.hamiltonian.empty()) throw ValidationError("expression model needs model.hamiltonian");
        if (m.dipole.empty() && m.dim != 2) throw ValidationError("expression model with d != 2 needs a dipole");
        s.name = "expression";
        s.dim = m.dim;
        s.fiber_hamiltonian = expression_matrix(m.hamiltonian, m.hamiltonian_imag, m.dim, consts, "model.hamiltonian");
        const CMat px = pauli_x();
        s.dipole = [px](double) { return px; };
        s.lambda0 = m.lambda0;
    }
    if (!m.dipole.empty()) s.dipole = expression_matrix(m.dipole, m.dipole_imag, m.dim, consts, "model.dipole");
    s.band_i = m.band_i;
    s.band_j = m.band_j;
    return s;
}

std::string canonical_config(const ExperimentConfig& cfg) { return config_json(cfg).dump(); }

std::string config_hash(const ExperimentConfig& cfg) {
    return fmt::format("{:016x}", fnv1a64(canonical_config(cfg)));
}

std::string format_csv(const std::string& hash, const std::vector<CsvRow>& rows) {
    std::string out = "config_hash,method,eps,beta,quantity,value\n";
    for (const auto& r : rows)
        out += hash + "," + r.method + "," + num(r.eps) + "," + num(r.beta) + "," + r.quantity + "," + num(r.value) +
               "\n";
    return out;
}

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write '" + tmp + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw ValidationError("write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw ValidationError("cannot rename '" + tmp + "': " + ec.message());
    }
}

RunRecord run(const ExperimentConfig& cfg, const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    validate_config(cfg);
    Context ctx{cfg, build_model(cfg.model), make_grid(cfg.n_points, cfg.length), {}, json::object(), {}};
    ctx.rec.config_hash = config_hash(cfg);
    ctx.rec.task = cfg.task;
    const std::string label = "[config " + ctx.rec.config_hash + ", task " + cfg.task + "] ";
    try {
        precheck(ctx);
        if (cfg.task == "scan-adiabatic") task_scan_adiabatic(ctx);
        else if (cfg.task == "scan-superadiabatic") task_scan_superadiabatic(ctx);
        else if (cfg.task == "scan-dressed") task_scan_dressed(ctx);
        else if (cfg.task == "decay") task_decay(ctx);
        else if (cfg.task == "oracle") task_oracle(ctx);
        else if (cfg.task == "compare") task_compare(ctx);
        else if (cfg.task == "bands") task_bands(ctx);
        else if (cfg.task == "transition") task_transition(ctx);
        else task_propagate(ctx);
    } catch (const Error& e) {
        rethrow_labelled(e, label);
    }

    json summary;
    summary["config_hash"] = ctx.rec.config_hash;
    summary["task"] = cfg.task;
    summary["config"] = config_json(cfg);
    summary["results"] = ctx.results;
    summary["diagnostics"] = ctx.rec.diagnostics;
    ctx.rec.json = summary.dump(2) + "\n";
    ctx.rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    spdlog::info("{}finished in {:.2f} s", label, ctx.rec.seconds);

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path dir(out_dir);
        write_atomic((dir / "results.csv").string(), format_csv(ctx.rec.config_hash, ctx.rec.rows));
        write_atomic((dir / "summary.json").string(), ctx.rec.json);
        for (const auto& [name, content] : ctx.files) write_atomic((dir / name).string(), content);
    }
    return ctx.rec;
}

}  // namespace bornrad
