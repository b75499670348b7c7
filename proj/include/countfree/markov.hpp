#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace countfree {

/// P(N1 > N2) for independent N1 ~ Poisson(mu1), N2 ~ Poisson(mu2).
///
/// Summed directly as sum_n P(N2 = n) P(N1 > n) with log-domain pmfs and
/// backward-accumulated tails, so tiny probabilities keep their relative
/// precision. Each variable is truncated at mean + 12 sqrt(mean) + 30.
double poisson_greater(double mu1, double mu2);

/// P(N1 >= N2), same summation.
double poisson_greater_equal(double mu1, double mu2);

/// Skellam CDF at zero: P(N1 - N2 <= 0).
double skellam_cdf0(double mu1, double mu2);

/// Modified Bessel function of the first kind, order zero (power series).
double bessel_i0(double x);

/// Tridiagonal transition model of one integer-step binner over L window
/// locations (states 0..L).
struct MarkovModel {
  std::vector<double> rates;
  std::vector<double> prefix_sums;  ///< s_k = sum of rates[0..k)
  std::vector<double> suffix_sums;  ///< t_k = sum of rates[k..L)
  std::vector<double> p_down;
  std::vector<double> p_stay;
  std::vector<double> p_up;

  [[nodiscard]] std::size_t locations() const noexcept { return rates.size(); }
  [[nodiscard]] std::size_t states() const noexcept { return rates.size() + 1; }
};

/// Throws std::invalid_argument for negative or all-zero rates.
MarkovModel build_model(std::span<const double> rates);

struct StationaryDistribution {
  std::vector<double> pi;

  /// First state of maximal probability.
  [[nodiscard]] std::size_t mode() const;
};

/// Birth-death detailed-balance solution, accumulated in the log domain.
/// Throws NumericalError when some p_up[k] (k < L) or p_down[k] (k > 0) is zero.
StationaryDistribution stationary(const MarkovModel& model);

/// One step of pi -> pi P.
std::vector<double> apply_transition(const MarkovModel& model, std::span<const double> pi);

/// For each radius rho, the mass of pi on states k with
/// round(median) - rho <= k < round(median) + rho. A radius of at least L
/// covers every state.
std::vector<double> concentration(std::span<const double> pi, double median,
                                  std::span<const double> radii);

/// Smallest total photon rate for which the Chernoff bound guarantees the
/// wrong side wins with probability at most eps when a fraction f of the
/// photons lies on one side: (1 / (sqrt f - sqrt(1 - f)))^2 ln(1 / eps).
/// Throws std::invalid_argument outside 0 < f < 1, 0 < eps < 1 and
/// std::domain_error at f = 0.5, where the bound diverges.
double chernoff_min_rate(double f, double eps);

}  // namespace countfree
