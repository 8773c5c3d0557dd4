#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bornrad/decay.hpp"

namespace bornrad {

struct ModelConfig {
    std::string type = "rotation";  // rotation | constant | expression
    RotationParams rotation;
    std::vector<double> levels{0.0, 1.0};
    int dim = 2;
    std::vector<std::vector<std::string>> hamiltonian;       // real parts
    std::vector<std::vector<std::string>> hamiltonian_imag;  // optional
    std::vector<std::vector<std::string>> dipole;            // empty: Pauli x (d = 2)
    std::vector<std::vector<std::string>> dipole_imag;
    std::vector<std::pair<std::string, double>> constants;
    double lambda0 = 4.0;
    int band_i = 0;
    int band_j = 1;
};

struct ExperimentConfig {
    std::string task = "decay";
    ModelConfig model;
    int n_points = 256;
    double length = 2.0 * pi;
    std::vector<double> ladder;
    double eps = 1.0 / 32;
    double beta = 1.0;
    std::optional<double> delta;
    std::optional<double> coupling;
    int modes = 256;
    std::string scheme = "midpoint";
    double t = 0.5;
    int batch = 16;
    double pmax = 1.0;
    std::uint64_t seed = 1;
    int order = 2;
    int samples = 32;
    bool with_t2 = false;
    bool unsafe_beta = false;
    bool purified = false;  // oracle task: purified instead of bare band projection
    std::string method = "theorem2";
    std::string route = "diagonal";
    PacketParams packet{1.0, 0.5, 0.5};
    double cutoff_energy = 4.0;
    Eigen::Index max_state_dim = Eigen::Index(1) << 23;
    double max_work = 2e11;
};

// Tasks that need an eps ladder (length >= 3).
bool is_scan_task(const std::string& task);

// Throws ParseError (with line and key) or ValidationError. With
// validate = false only the syntax and key names are checked.
ExperimentConfig parse_config(const std::string& path, bool validate = true);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<string>",
                                   bool validate = true);
// Re-checks cross-field constraints after command-line overrides.
void validate_config(const ExperimentConfig& cfg);

ModelSpec build_model(const ModelConfig& m);

// Deterministic text form of the configuration and its FNV-1a hash (hex).
std::string canonical_config(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

struct CsvRow {
    std::string method;
    double eps = 0.0;
    double beta = 0.0;
    std::string quantity;
    double value = 0.0;
};

struct RunRecord {
    std::string config_hash;
    std::string task;
    std::vector<CsvRow> rows;
    std::string json;  // summary document
    double seconds = 0.0;
    std::vector<std::string> diagnostics;
};

// Dispatches the configured task. Writes results.csv and summary.json into
// out_dir (when non-empty) by write-then-rename.
RunRecord run(const ExperimentConfig& cfg, const std::string& out_dir = "");

std::string format_csv(const std::string& hash, const std::vector<CsvRow>& rows);
void write_atomic(const std::string& path, const std::string& content);

}  // namespace bornrad
