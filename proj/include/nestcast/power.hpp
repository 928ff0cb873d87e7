#ifndef NESTCAST_POWER_HPP
#define NESTCAST_POWER_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nestcast/nesttest.hpp"
#include "nestcast/numcore/linalg.hpp"

namespace nestcast::power {

using num::Matrix;
using num::Vector;

/// Inputs for the stationary-predictor noncentralities.  Q is the full
/// second-moment matrix of (x1, x2) with the first p1 rows/columns belonging
/// to the small model; gamma is the local drift on the extra predictors.
struct StationaryPowerInputs {
    Vector gamma;
    Matrix Q;
    std::size_t p1 = 0;
    double sigma = 1.0;
    double pi0 = 0.25;

    void validate() const;
};

/// gamma' (Q22 - Q21 Q11^{-1} Q12) gamma.
double schur_quadratic(const StationaryPowerInputs& in);

double noncentrality_psi0(const StationaryPowerInputs& in, double lambda1, double lambda2);
double noncentrality_psibar(const StationaryPowerInputs& in, double tau0, double lambda2);

/// 1 - Phi(q_alpha - psi), with psi doubled for the adjusted statistics.
double alpf(double psi, double alpha, bool adjusted = false);

/// Minimizer of vbar(tau0, .) over lambda2: 0.5 * tau0 + 0.5.
double optimal_lambda2(double tau0);

/// Ratio vbar(tau0, optimal_lambda2(tau0)) / v0(lambda1, lambda2).  The
/// explicit closed form is evaluated as a redundancy check and any
/// disagreement above 1e-10 raises an Error.
double are(double lambda1, double lambda2, double tau0);

/// The explicit closed form of `are`, exposed for testing.
double are_closed_form(double lambda1, double lambda2, double tau0);

/// lambda2 at which are(1, lambda2, tau0) == 1.
double are_threshold(double tau0);

/// gamma = beta * T^{1/4} (stationary) or beta * T^{3/4} (persistent).
double beta_to_gamma(double beta, std::size_t T, bool persistent = false);
double gamma_to_beta(double gamma, std::size_t T, bool persistent = false);

enum class OuScheme { exact, euler };

/// Local-to-unity limit processes dJ = -C J ds + dW on [0, 1], J(0) = 0.
/// The first p1 coordinates belong to the small model.
struct OuSpec {
    Vector c;                       ///< diagonal of C, one entry per coordinate
    std::size_t p1 = 0;
    std::size_t n_steps = 2000;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 0;
    OuScheme scheme = OuScheme::exact;
    Matrix cov;                     ///< innovation covariance; identity if empty
    std::size_t workers = 0;        ///< 0 = OpenMP default

    void validate() const;
};

struct OuSummary {
    std::vector<double> values;     ///< noncentrality per retained path
    std::vector<std::size_t> path_index;
    double mean = 0.0;
    double sd = 0.0;
    double se = 0.0;
    double q05 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q95 = 0.0;
    std::size_t n_discarded = 0;
};

/// Monte Carlo distribution of the persistent-predictor noncentrality for the
/// variant in `config` (s0, sbar and their adjusted forms).  Path i draws from
/// stream i of spec.seed, so results do not depend on the worker count.
OuSummary simulate_ou_noncentrality(const OuSpec& spec, const Vector& gamma, double sigma, double pi0,
                                    const nesttest::SpreadConfig& config);

/// Single-threaded reference of simulate_ou_noncentrality.
OuSummary simulate_ou_noncentrality_serial(const OuSpec& spec, const Vector& gamma, double sigma, double pi0,
                                           const nesttest::SpreadConfig& config);

}  // namespace nestcast::power

#endif  // NESTCAST_POWER_HPP
