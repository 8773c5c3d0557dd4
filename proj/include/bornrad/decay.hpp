#pragma once

#include <string>
#include <vector>

#include "bornrad/transition.hpp"

namespace bornrad {

enum class DecayMethod { theorem2, dyson, oracle, fgr_static };
std::string to_string(DecayMethod m);
DecayMethod parse_method(const std::string& name);

struct DecayCurve {
    DecayMethod method = DecayMethod::theorem2;
    std::vector<double> times;
    std::vector<double> probability;
    double norm_drift = 0.0;       // oracle only
    double dropped_weight = 0.0;   // oracle only: largest two-photon weight seen
    std::string note;

    double final_value() const { return probability.empty() ? 0.0 : probability.back(); }
};

// (4/3) alpha^3 dE^3 |D|^2 t. Logs a warning above 1/2 (outside the linear regime).
double fgr_static(double gap, double dipole, double alpha, double t);

enum class BandRoute { diagonal, bo };

struct DecayOptions {
    int samples = 32;
    BandRoute route = BandRoute::diagonal;
    bool born_huang = false;
    double tol = 1e-8;       // Simpson doubling target
    double fail_tol = 0.01;  // error if the last doubling still changes more than this
    int max_doublings = 14;
};

// prefactor * int_0^t (4/3) || |D| dE^{3/2} exp(-i s/eps H_j) P_j psi ||^2 ds at
// `samples` uniform times, prefactor = coupling^2 / eps (= eps^{3 beta - 1} tied).
DecayCurve decay_probability(const BandData& band_i, const BandData& band_j, const FiberField& mu,
                             const CVec& psi0, double t, double eps, double prefactor,
                             const SpectralPtr& sp, const DecayOptions& opt = {});

struct OracleOptions {
    int samples = 32;
    KrylovOptions krylov{30, 1e-8, 200000};
    Eigen::Index max_state_dim = Eigen::Index(1) << 23;
    double max_work = 2e11;  // state dimension x estimated matvecs
    bool purified = false;
    double beta = 1.0;
};

// Norm estimate used by the budget check.
double dressed_norm_estimate(const DressedHamiltonian& h);

// ||(P (x) 1) exp(-i t/eps H) (psi0 (x) vacuum)||^2 at sample times. With a
// dense projection q it is applied per sector; otherwise the bare fiber
// projector `bare` is used. Throws BudgetExceeded before propagating.
DecayCurve oracle_transition(const DressedHamiltonian& h, const FiberField& bare, const CMat* q,
                             const CVec& psi0, double t, const OracleOptions& opt = {});

struct ComparisonRow {
    double eps = 0.0;
    double theorem2 = 0.0;
    double dyson = 0.0;
    double oracle = 0.0;
    double dev_oracle = 0.0;  // |oracle - theorem2| / theorem2
    double dev_dyson = 0.0;
};

struct Comparison {
    std::vector<ComparisonRow> rows;
    bool oracle_monotone = false;  // decreasing up to one inversion
    bool dyson_monotone = false;
    ScalingReport oracle_deviation;
};

struct CompareOptions {
    std::vector<double> ladder{1.0 / 8, 1.0 / 16, 1.0 / 32};
    double beta = 1.0;
    int modes = 128;
    QuadratureScheme scheme = QuadratureScheme::midpoint;
    PacketParams packet{1.0, 0.5, 0.5};
    double t = 0.5;
    double cutoff_energy = 4.0;
    bool with_t2 = false;
    std::optional<double> delta_override;
    std::optional<double> coupling_override;
    bool unsafe_beta = false;
    bool run_dyson = true;
    bool run_oracle = true;
    OracleOptions oracle;
    DysonOptions dyson;
    DecayOptions decay;
};

// Initial state: purified second-order P_j^eps applied to packet (x) phi_j.
Comparison compare_methods(const ModelSpec& spec, const Grid1D& grid, const CompareOptions& opt = {});

// True if the sequence decreases with at most `inversions` increases.
bool decreasing_up_to(const std::vector<double>& v, int inversions = 1);

}  // namespace bornrad
