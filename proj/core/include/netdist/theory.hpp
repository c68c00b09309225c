#pragma once

// Convergence-rate formulas, Lyapunov matrices, spectral radii and
// theory-driven parameter selection.

#include "netdist/common.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace netdist {

struct RateModel {
  double sigma = 1.0;
  double L = 1.0;
  double beta = 0.0;
  double alpha = 0.0;  // effective mixing rate after K rounds
  double mu = 0.0;

  double kappa() const { return L / sigma; }
  double eta() const { return 1.0 / (sigma + mu); }
  double gamma() const { return L / (L + mu); }

  /// Throws DomainError unless 0 < sigma <= L, beta >= 0, 0 <= alpha < 1, mu >= 0.
  void validate() const;
};

double theta1(const RateModel& m);
double theta2(const RateModel& m);
double rho1(const RateModel& m);
double rho2(const RateModel& m);

enum class Lemma { lemma1, lemma2, lemma3, lemma4, simplified1, simplified2 };

std::string_view to_string(Lemma which);
Lemma parse_lemma(std::string_view name);

struct LyapunovMatrix {
  Matrix G;
  Lemma which = Lemma::lemma1;
};

/// Default inner contraction for the variance-reduced matrices: the bounds
/// (1/2)(sigma - 2 beta)/(sigma - 3 beta) (SVRG) and (1/2)/(1 - 4 beta^2/sigma^2) (SARAH).
double default_nu(const RateModel& m, Lemma which);

/// nu only matters for lemma3/lemma4; defaults to default_nu.
LyapunovMatrix lyapunov_matrix(const RateModel& m, Lemma which, std::optional<double> nu = {});

/// Perron root of a nonnegative matrix via power iteration on G + I.
/// 3x3 inputs are cross-checked against the largest real root of the
/// characteristic cubic.
double spectral_radius(const Matrix& G);

/// Largest real root of lambda^3 + a lambda^2 + b lambda + c.
double largest_real_root_cubic(double a, double b, double c);

/// Closed-form det(lambda I - G1) for the simplified quadratic matrix.
double simplified1_characteristic(const RateModel& m, double lambda);

enum class Regime { thm1, cor1, thm2, thm3, cor2, thm4, thm5 };

std::string_view to_string(Regime r);
Regime parse_regime(std::string_view name);

struct ProblemSummary {
  double sigma = 1.0;
  double L = 1.0;
  double beta = 0.0;
};

struct ParameterChoice {
  Regime regime = Regime::cor1;
  double mu = 0.0;
  int K = 1;
  double alpha = 0.0;  // alpha0^K
  double svrg_delta = 0.0;
  int svrg_S = 0;
  double sarah_delta = 0.0;
  int sarah_S = 0;
  std::vector<std::string> warnings;
};

/// `K` is used as given for thm1/cor1/thm3/cor2; thm2/thm4/thm5 pick their own K.
ParameterChoice select_parameters(Regime regime, const ProblemSummary& pc, double alpha0, int K = 1);

struct LyapunovReport {
  bool pass = true;
  int t = -1;          // first violating step
  int component = -1;  // its component
  double excess = 0.0;  // e(t)_i - (G e(t-1))_i - slack at the violation
  double worst_margin = 0.0;  // max over all checks of e - G e_prev
};

/// Checks e(t) <= G e(t-1) + slack componentwise for every t >= 1.
LyapunovReport lyapunov_check(const std::vector<Vector>& trace, const Matrix& G, double slack);

}  // namespace netdist
