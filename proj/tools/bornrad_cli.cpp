// Command-line front end: one subcommand per task, plus `fit`.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "bornrad/config.hpp"
#include "bornrad/errors.hpp"
#include "bornrad/scaling.hpp"

namespace {

struct Overrides {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool unsafe_beta = false;
    std::optional<double> eps, beta, delta, t;
    std::optional<int> order, modes, samples, batch, n_points;
    std::optional<std::string> method, scheme;
    bool with_t2 = false;
    bool purified = false;
    std::vector<double> ladder;
};

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config, "YAML experiment file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (results.csv, summary.json)");
    sub->add_option("--seed", o.seed, "batch seed");
    sub->add_flag("--unsafe-beta", o.unsafe_beta, "allow beta outside (5/6, 4/3]");
    sub->add_option("--eps", o.eps, "adiabatic parameter");
    sub->add_option("--beta", o.beta, "coupling exponent");
    sub->add_option("--delta-override", o.delta, "resolvent shift");
    sub->add_option("--t", o.t, "time horizon (macroscopic)");
    sub->add_option("--order", o.order, "superadiabatic order (1 or 2)");
    sub->add_option("--modes", o.modes, "photon mode count");
    sub->add_option("--samples", o.samples, "sample times");
    sub->add_option("--batch", o.batch, "batch size");
    sub->add_option("--n-points", o.n_points, "grid points");
    sub->add_option("--method", o.method, "theorem2 | dyson | oracle | fgr-static");
    sub->add_option("--scheme", o.scheme, "midpoint | gauss-legendre");
    sub->add_flag("--with-t2", o.with_t2, "include the gradient correction in the transition kernel");
    sub->add_flag("--purified", o.purified, "oracle: use the purified band projection");
    sub->add_option("--eps-ladder", o.ladder, "eps values for scans")->delimiter(',');
}

bornrad::ExperimentConfig load(const std::string& task, const Overrides& o) {
    bornrad::ExperimentConfig c;
    if (!o.config.empty()) {
        // Validated after the overrides are applied.
        c = bornrad::parse_config(o.config, false);
    } else {
        c.ladder = {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
    }
    c.task = task;
    if (o.seed) c.seed = *o.seed;
    if (o.unsafe_beta) c.unsafe_beta = true;
    if (o.eps) c.eps = *o.eps;
    if (o.beta) c.beta = *o.beta;
    if (o.delta) c.delta = *o.delta;
    if (o.t) c.t = *o.t;
    if (o.order) c.order = *o.order;
    if (o.modes) c.modes = *o.modes;
    if (o.samples) c.samples = *o.samples;
    if (o.batch) c.batch = *o.batch;
    if (o.n_points) c.n_points = *o.n_points;
    if (o.method) c.method = *o.method;
    if (o.scheme) c.scheme = *o.scheme;
    if (o.with_t2) c.with_t2 = true;
    if (o.purified) c.purified = true;
    if (!o.ladder.empty()) c.ladder = o.ladder;
    bornrad::validate_config(c);
    return c;
}

int run_task(const std::string& task, const Overrides& o) {
    const auto cfg = load(task, o);
    const auto rec = bornrad::run(cfg, o.out);
    if (o.out.empty()) std::cout << bornrad::format_csv(rec.config_hash, rec.rows);
    for (const auto& d : rec.diagnostics) spdlog::warn("{}", d);
    spdlog::info("config {} ({} rows, {:.2f} s)", rec.config_hash, rec.rows.size(), rec.seconds);
    return 0;
}

// Two numeric columns (parameter, value); a non-numeric first line is a header.
std::vector<bornrad::ScalingPoint> read_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw bornrad::ParseError("cannot open '" + path + "'");
    std::vector<bornrad::ScalingPoint> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double a, b;
        if (!(ls >> a >> b)) {
            if (lineno == 1) continue;
            throw bornrad::ParseError(path + ": line " + std::to_string(lineno) + ": expected two numbers");
        }
        pts.push_back({a, b});
    }
    return pts;
}

int run_fit(const std::string& input, const std::string& quantity, double floor, const std::string& out) {
    const auto r = bornrad::fit_scaling(read_points(input), quantity, floor);
    nlohmann::json j;
    j["quantity"] = r.quantity;
    j["exponent"] = r.exponent;
    j["intercept"] = r.intercept;
    j["r_squared"] = r.r_squared;
    j["used_points"] = r.used_points;
    j["degenerate"] = r.degenerate;
    j["note"] = r.note;
    const std::string text = j.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        std::filesystem::create_directories(out);
        bornrad::write_atomic((std::filesystem::path(out) / "fit.json").string(), text);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bornrad: radiative decay in adiabatic molecular models"};
    app.require_subcommand(1);
    std::string level = "info";
    app.add_option("--log-level", level, "trace | debug | info | warn | error");

    const std::vector<std::pair<std::string, std::string>> tasks = {
        {"bands", "band energies, gaps, dipole elements and Berry connection"},
        {"propagate-full", "split-step propagation of the full molecular Hamiltonian"},
        {"propagate-diagonal", "Krylov propagation of the band-diagonal Hamiltonian"},
        {"propagate-bo", "Born-Oppenheimer effective propagation"},
        {"scan-adiabatic", "adiabatic error exponent"},
        {"scan-superadiabatic", "superadiabatic projection exponents"},
        {"scan-dressed", "dressed vacuum projection exponents"},
        {"decay", "transition probability curve"},
        {"oracle", "dressed-space reference propagation"},
        {"compare", "theorem2, Dyson and oracle along an eps ladder"},
        {"transition", "Dyson transition amplitude at the final time"},
    };
    Overrides o;
    for (const auto& [name, help] : tasks) add_common(app.add_subcommand(name, help), o);

    std::string fit_input, fit_quantity, fit_out;
    double fit_floor = bornrad::kScalingFloor;
    auto* fit = app.add_subcommand("fit", "log-log exponent fit of (eps, value) pairs");
    fit->add_option("input", fit_input, "CSV with two numeric columns")->required();
    fit->add_option("--quantity", fit_quantity, "label");
    fit->add_option("--floor", fit_floor, "values below are excluded");
    fit->add_option("--out", fit_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    spdlog::set_default_logger(spdlog::stderr_color_mt("bornrad"));
    spdlog::set_level(spdlog::level::from_str(level));
    try {
        if (*fit) return run_fit(fit_input, fit_quantity, fit_floor, fit_out);
        for (const auto& [name, help] : tasks)
            if (*app.get_subcommand(name)) return run_task(name, o);
    } catch (const bornrad::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
