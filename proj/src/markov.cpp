#include "countfree/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "countfree/errors.hpp"

namespace countfree {
namespace {

std::size_t truncation(double mu) {
  return static_cast<std::size_t>(std::ceil(mu + 12.0 * std::sqrt(mu) + 30.0));
}

std::vector<double> poisson_pmf(double mu, std::size_t n_max) {
  std::vector<double> pmf(n_max + 1, 0.0);
  if (mu == 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  const double log_mu = std::log(mu);
  for (std::size_t n = 0; n <= n_max; ++n) {
    const double k = static_cast<double>(n);
    pmf[n] = std::exp(k * log_mu - mu - std::lgamma(k + 1.0));
  }
  return pmf;
}

void check_rates(double mu1, double mu2) {
  if (!(mu1 >= 0.0) || !(mu2 >= 0.0) || !std::isfinite(mu1) || !std::isfinite(mu2))
    throw std::invalid_argument("Poisson means must be finite and non-negative");
}

// sum_n P(N2 = n) P(N1 >= n + offset), offset 1 for ">" and 0 for ">=".
double compare(double mu1, double mu2, std::size_t offset) {
  check_rates(mu1, mu2);
  const std::size_t n1 = truncation(mu1);
  const std::size_t n2 = truncation(mu2);
  const auto pmf1 = poisson_pmf(mu1, n1);
  const auto pmf2 = poisson_pmf(mu2, n2);
  // tail1[j] = P(N1 >= j)
  std::vector<double> tail1(n1 + 2, 0.0);
  for (std::size_t j = n1 + 1; j-- > 0;) tail1[j] = tail1[j + 1] + pmf1[j];
  double total = 0.0;
  for (std::size_t n = 0; n <= n2; ++n) {
    const std::size_t j = n + offset;
    if (j > n1) break;
    total += pmf2[n] * tail1[j];
  }
  return std::min(total, 1.0);
}

}  // namespace

double poisson_greater(double mu1, double mu2) { return compare(mu1, mu2, 1); }
double poisson_greater_equal(double mu1, double mu2) { return compare(mu1, mu2, 0); }
double skellam_cdf0(double mu1, double mu2) { return 1.0 - poisson_greater(mu1, mu2); }

double bessel_i0(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 10000; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

MarkovModel build_model(std::span<const double> rates) {
  if (rates.empty()) throw std::invalid_argument("Markov model needs at least one location");
  MarkovModel m;
  m.rates.assign(rates.begin(), rates.end());
  const std::size_t L = rates.size();
  m.prefix_sums.assign(L + 1, 0.0);
  m.suffix_sums.assign(L + 1, 0.0);
  for (std::size_t i = 0; i < L; ++i) {
    if (!(rates[i] >= 0.0) || !std::isfinite(rates[i]))
      throw std::invalid_argument("rates must be finite and non-negative");
    m.prefix_sums[i + 1] = m.prefix_sums[i] + rates[i];
  }
  for (std::size_t i = L; i-- > 0;) m.suffix_sums[i] = m.suffix_sums[i + 1] + rates[i];
  const double total = m.prefix_sums[L];
  if (!(total > 0.0)) throw std::invalid_argument("Markov model needs a positive total rate");

  m.p_down.assign(L + 1, 0.0);
  m.p_stay.assign(L + 1, 0.0);
  m.p_up.assign(L + 1, 0.0);
  const double stay_edge = std::exp(-total);
  m.p_stay[0] = m.p_stay[L] = stay_edge;
  m.p_up[0] = m.p_down[L] = 1.0 - stay_edge;
  for (std::size_t k = 1; k < L; ++k) {
    const double s = m.prefix_sums[k];
    const double t = m.suffix_sums[k];
    m.p_up[k] = poisson_greater(t, s);
    m.p_down[k] = poisson_greater(s, t);
    m.p_stay[k] = std::max(0.0, 1.0 - m.p_up[k] - m.p_down[k]);
  }
  return m;
}

std::size_t StationaryDistribution::mode() const {
  return static_cast<std::size_t>(std::max_element(pi.begin(), pi.end()) - pi.begin());
}

StationaryDistribution stationary(const MarkovModel& model) {
  const std::size_t L = model.locations();
  std::vector<double> log_pi(L + 1, 0.0);
  for (std::size_t k = 0; k < L; ++k) {
    if (!(model.p_up[k] > 0.0) || !(model.p_down[k + 1] > 0.0))
      throw NumericalError("reducible chain: a transition between states " +
                           std::to_string(k) + " and " + std::to_string(k + 1) +
                           " has zero probability");
    log_pi[k + 1] = log_pi[k] + std::log(model.p_up[k]) - std::log(model.p_down[k + 1]);
  }
  const double peak = *std::max_element(log_pi.begin(), log_pi.end());
  StationaryDistribution out;
  out.pi.resize(L + 1);
  double norm = 0.0;
  for (std::size_t k = 0; k <= L; ++k) norm += out.pi[k] = std::exp(log_pi[k] - peak);
  for (double& p : out.pi) p /= norm;
  return out;
}

std::vector<double> apply_transition(const MarkovModel& model, std::span<const double> pi) {
  const std::size_t n = model.states();
  if (pi.size() != n) throw std::invalid_argument("distribution length does not match model");
  std::vector<double> next(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    next[k] += pi[k] * model.p_stay[k];
    if (k + 1 < n) next[k + 1] += pi[k] * model.p_up[k];
    if (k > 0) next[k - 1] += pi[k] * model.p_down[k];
  }
  return next;
}

std::vector<double> concentration(std::span<const double> pi, double median,
                                  std::span<const double> radii) {
  const auto L = static_cast<long long>(pi.size()) - 1;
  const auto center = std::llround(median);
  std::vector<double> out;
  out.reserve(radii.size());
  for (double rho : radii) {
    if (!(rho >= 0.0)) throw std::invalid_argument("concentration radius must be >= 0");
    long long lo = 0;
    long long hi = L;
    if (rho < static_cast<double>(L)) {
      const auto r = static_cast<long long>(std::floor(rho));
      lo = std::max(0LL, center - r);
      hi = std::min(L, center + r - 1);
    }
    double mass = 0.0;
    for (long long k = lo; k <= hi; ++k) mass += pi[static_cast<std::size_t>(k)];
    out.push_back(mass);
  }
  return out;
}

double chernoff_min_rate(double f, double eps) {
  if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("f must lie in (0, 1)");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0, 1)");
  const double gap = std::sqrt(f) - std::sqrt(1.0 - f);
  if (gap == 0.0) throw std::domain_error("Chernoff bound diverges at f = 0.5");
  return std::log(1.0 / eps) / (gap * gap);
}

}  // namespace countfree
