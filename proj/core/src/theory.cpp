#include "netdist/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace netdist {

void RateModel::validate() const {
  std::ostringstream msg;
  if (!(sigma > 0 && sigma <= L)) msg << "need 0 < sigma <= L (sigma=" << sigma << ", L=" << L << ")";
  else if (!(beta >= 0)) msg << "need beta >= 0";
  else if (!(alpha >= 0 && alpha < 1)) msg << "need 0 <= alpha < 1 (alpha=" << alpha << ")";
  else if (!(mu >= 0)) msg << "need mu >= 0";
  else return;
  throw DomainError(msg.str());
}

double theta1(const RateModel& m) {
  m.validate();
  const double sm = m.sigma + m.mu;
  if (m.beta >= sm)
    throw DomainError("theta1 requires beta < sigma + mu (beta=" + std::to_string(m.beta) +
                      ", sigma+mu=" + std::to_string(sm) + ")");
  return 1.0 - m.sigma / sm + m.gamma() * m.beta * m.beta / (sm * (sm - m.beta));
}

double theta2(const RateModel& m) {
  m.validate();
  const double sm = m.sigma + m.mu;
  const double r = m.mu / sm;
  return 1.0 - m.sigma / sm + (m.beta / sm) * std::sqrt(1.0 - r * r);
}

double rho1(const RateModel& m) {
  const double th = theta1(m);
  const double sm = m.sigma + m.mu;
  const double a = m.alpha;
  return std::max({0.5 * (1.0 + th), a + 140.0 * m.kappa() * (m.sigma + m.beta) / ((1.0 - a) * sm),
                   0.5 * (1.0 + a) + 2.0 * m.beta / sm});
}

double rho2(const RateModel& m) {
  const double th = theta2(m);
  const double sm = m.sigma + m.mu;
  const double a = m.alpha;
  return std::max({0.5 * (1.0 + th), a + 170.0 * m.kappa() * m.L / ((1.0 - a) * sm),
                   0.5 * (1.0 + a) + 2.0 * m.beta / sm});
}

std::string_view to_string(Lemma which) {
  switch (which) {
    case Lemma::lemma1: return "lemma1";
    case Lemma::lemma2: return "lemma2";
    case Lemma::lemma3: return "lemma3";
    case Lemma::lemma4: return "lemma4";
    case Lemma::simplified1: return "simplified1";
    case Lemma::simplified2: return "simplified2";
  }
  return "?";
}

Lemma parse_lemma(std::string_view name) {
  for (auto l : {Lemma::lemma1, Lemma::lemma2, Lemma::lemma3, Lemma::lemma4, Lemma::simplified1,
                 Lemma::simplified2})
    if (to_string(l) == name) return l;
  throw ConfigError("unknown lemma '" + std::string(name) + "'");
}

double default_nu(const RateModel& m, Lemma which) {
  const double r = m.beta / m.sigma;
  if (which == Lemma::lemma3) {
    if (!(m.sigma > 3.0 * m.beta)) throw DomainError("nu bound needs sigma > 3 beta");
    return 0.5 * (m.sigma - 2.0 * m.beta) / (m.sigma - 3.0 * m.beta);
  }
  if (which == Lemma::lemma4) {
    if (!(4.0 * r * r < 1.0)) throw DomainError("nu bound needs 4 (beta/sigma)^2 < 1");
    return 0.5 / (1.0 - 4.0 * r * r);
  }
  throw DomainError("nu is only defined for lemma3/lemma4");
}

LyapunovMatrix lyapunov_matrix(const RateModel& m, Lemma which, std::optional<double> nu) {
  m.validate();
  const double a = m.alpha, b = m.beta, L = m.L, s = m.sigma;
  const double eta = m.eta(), gam = m.gamma();
  const double bl = b / L;
  LyapunovMatrix out;
  out.which = which;
  Matrix& G = out.G;
  switch (which) {
    case Lemma::lemma1: {
      const double th = theta1(m);
      G.resize(3, 3);
      G << th, gam * eta * b + eta * b, eta * eta * L * b,
          a * gam * eta * b, a + a * eta * L, a * eta * L,
          bl + th * bl + a * gam * eta * b * bl,
          a * bl + a + 1.0 + gam * eta * b * bl + eta * b * bl + a * bl + a * eta * b,
          a + gam * eta * b * bl + a * eta * b;
      break;
    }
    case Lemma::simplified1: {
      const double th = theta1(m);
      G.resize(3, 3);
      G << th, 2.0 * eta * b, eta * eta * L * b,
          a * gam * eta * b, a + a * eta * L, a * eta * L,
          3.0 * bl, 7.0, a + 2.0 * eta * b;
      break;
    }
    case Lemma::lemma2: {
      const double lhs = std::pow(b / (s + m.mu), 2);
      const double rhs = s / (s + 2.0 * m.mu);
      if (lhs > rhs)
        throw DomainError("lemma2 requires (beta/(sigma+mu))^2 <= sigma/(sigma+2mu), got " +
                          std::to_string(lhs) + " > " + std::to_string(rhs));
      const double th = theta2(m);
      G.resize(3, 3);
      G << th, eta * L, gam * eta * L,
          a * gam * eta * L, a + a * eta * L, a * eta * L,
          bl + th * bl + a * gam * eta * b,
          a + 1.0 + a * bl + eta * b + a * bl + a * eta * b,
          a + gam * eta * b + a * eta * b;
      break;
    }
    case Lemma::simplified2: {
      const double th = theta2(m);
      G.resize(3, 3);
      G << th, 2.0 * eta * L, gam * eta * L,
          a * gam * eta * L, a + a * eta * L, a * eta * L,
          3.0 * bl, 7.0, a + 2.0 * eta * b;
      break;
    }
    case Lemma::lemma3:
    case Lemma::lemma4: {
      const double k = m.kappa();
      const double r = b / s;
      const double denom = 1.0 - 3.0 * a * k - 3.0 * r;
      if (!(denom > 0))
        throw DomainError("lemma3/lemma4 require 1 - 3 alpha kappa - 3 beta/sigma > 0, got " +
                          std::to_string(denom));
      const double z = 1.0 / denom;
      const double v = nu ? *nu : default_nu(m, which);
      const double lead = (v * (1.0 + 3.0 * a * k + 4.0 * r) + r) * z;
      G = Matrix::Zero(4, 4);
      if (which == Lemma::lemma3) {
        G.row(0) << lead, 8.0 * r * z, a * z / k, z / 16.0;
        G.row(2) << 8.0 * r * r, 64.0 * r * r, 4.0 * a * a, a * k / 2.0;
        G(3, 0) = 64.0 * a * k;
      } else {
        G.row(0) << lead, 8.0 * r * z, 2.0 * a * z / k, z / 8.0;
        G.row(2) << 4.0 * r * r, 32.0 * r * r, 4.0 * a * a, a * k / 2.0;
        G(3, 0) = 32.0 * a * k;
      }
      G(1, 0) = 0.5;
      break;
    }
  }
  if (!G.allFinite() || G.minCoeff() < 0)
    throw DomainError(std::string(to_string(which)) + " matrix has negative or non-finite entries");
  return out;
}

double largest_real_root_cubic(double a, double b, double c) {
  // depressed cubic t^3 + p t + q with lambda = t - a/3
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double disc = q * q / 4.0 + p * p * p / 27.0;
  double t;
  if (disc > 0) {
    const double sq = std::sqrt(disc);
    t = std::cbrt(-q / 2.0 + sq) + std::cbrt(-q / 2.0 - sq);
  } else if (p == 0.0) {
    t = std::cbrt(-q);
  } else {
    const double r = std::sqrt(-p / 3.0);
    const double arg = std::clamp(-q / (2.0 * r * r * r), -1.0, 1.0);
    t = 2.0 * r * std::cos(std::acos(arg) / 3.0);  // largest of the three real roots
  }
  double x = t - a / 3.0;
  // Newton polish
  for (int i = 0; i < 8; ++i) {
    const double f = ((x + a) * x + b) * x + c;
    const double df = (3.0 * x + 2.0 * a) * x + b;
    if (df == 0.0) break;
    const double dx = f / df;
    x -= dx;
    if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

double spectral_radius(const Matrix& G) {
  if (G.rows() != G.cols() || G.rows() == 0) throw DimensionError("spectral_radius needs a square matrix");
  if (G.minCoeff() < 0) throw DomainError("spectral_radius expects a nonnegative matrix");
  const auto n = G.rows();
  // G + I is aperiodic, so power iteration converges even for periodic G.
  Matrix B = G;
  B.diagonal().array() += 1.0;
  Vector v = Vector::Ones(n) / static_cast<double>(n);
  double lambda = 0.0, prev = -1.0;
  for (int it = 0; it < 100000; ++it) {
    Vector w = B * v;
    lambda = w.sum() / v.sum();
    w /= w.sum();
    v = std::move(w);
    if (std::abs(lambda - prev) <= 1e-12 * std::max(1.0, lambda) && it > 2) break;
    prev = lambda;
  }
  double rho = std::max(0.0, lambda - 1.0);
  if (n == 3) {
    const double tr = G.trace();
    const double minors = G(0, 0) * G(1, 1) - G(0, 1) * G(1, 0) + G(0, 0) * G(2, 2) -
                          G(0, 2) * G(2, 0) + G(1, 1) * G(2, 2) - G(1, 2) * G(2, 1);
    const double det = G.determinant();
    const double root = largest_real_root_cubic(-tr, minors, -det);
    const double scale = std::max(1.0, G.cwiseAbs().maxCoeff());
    if (std::abs(root - rho) > 1e-7 * scale)
      throw Error("spectral_radius: power iteration (" + std::to_string(rho) +
                  ") disagrees with the characteristic polynomial (" + std::to_string(root) + ")");
    rho = std::max(root, 0.0);
  }
  return rho;
}

double simplified1_characteristic(const RateModel& m, double lambda) {
  const double th = theta1(m);
  const double a = m.alpha, b = m.beta, L = m.L, eta = m.eta(), gam = m.gamma();
  const double p1 = (lambda - a - a * eta * L) * (lambda - a - 2.0 * eta * b) - 7.0 * a * eta * L -
                    2.0 * a * gam * eta * eta * b * b - 3.0 * eta * eta * b * b;
  return (lambda - th) * p1 +
         a * gam * eta * eta * b * b * (2.0 * a + 4.0 * eta * b - 2.0 * th - 7.0 * eta * L) -
         3.0 * eta * eta * b * b * (a - a * eta * L + th);
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::thm1: return "thm1";
    case Regime::cor1: return "cor1";
    case Regime::thm2: return "thm2";
    case Regime::thm3: return "thm3";
    case Regime::cor2: return "cor2";
    case Regime::thm4: return "thm4";
    case Regime::thm5: return "thm5";
  }
  return "?";
}

Regime parse_regime(std::string_view name) {
  for (auto r : {Regime::thm1, Regime::cor1, Regime::thm2, Regime::thm3, Regime::cor2, Regime::thm4,
                 Regime::thm5})
    if (to_string(r) == name) return r;
  throw ConfigError("unknown parameter regime '" + std::string(name) + "'");
}

namespace {

// Smallest K with alpha0^K <= target, starting from ceil(ln(1/target)/ln(1/alpha0)).
int rounds_for(double alpha0, double target) {
  if (alpha0 <= 0.0) return 1;
  int K = std::max(1, static_cast<int>(std::ceil(std::log(1.0 / target) / std::log(1.0 / alpha0))));
  while (std::pow(alpha0, K) > target) ++K;
  return K;
}

}  // namespace

ParameterChoice select_parameters(Regime regime, const ProblemSummary& pc, double alpha0, int K) {
  if (!(pc.sigma > 0 && pc.sigma <= pc.L)) throw DomainError("need 0 < sigma <= L");
  if (!(alpha0 >= 0 && alpha0 < 1)) throw DomainError("need 0 <= alpha0 < 1");
  if (K < 1) throw ConfigError("K must be >= 1");
  const double s = pc.sigma, L = pc.L, b = pc.beta, kappa = L / s, r = b / s;
  ParameterChoice out;
  out.regime = regime;
  double sm = 0.0;  // sigma + mu
  switch (regime) {
    case Regime::thm1:
    case Regime::cor1:
    case Regime::thm3:
    case Regime::cor2: {
      out.K = K;
      out.alpha = std::pow(alpha0, K);
      const double gap = (1.0 - out.alpha) * (1.0 - out.alpha);
      if (regime == Regime::thm1) sm = 140.0 * L * (r + 1.0) / gap;
      if (regime == Regime::cor1) sm = 180.0 * L * (r + 1.0) / gap;
      if (regime == Regime::thm3) sm = 170.0 * kappa * L / gap;
      if (regime == Regime::cor2) sm = 180.0 * kappa * L / gap;
      break;
    }
    case Regime::thm2:
    case Regime::thm4:
      out.K = rounds_for(alpha0, 1.0 / (2.0 * kappa));
      out.alpha = std::pow(alpha0, out.K);
      sm = regime == Regime::thm2 ? 360.0 * s * (r * r + 1.0) : 360.0 * L * (r + 1.0);
      break;
    case Regime::thm5: {
      out.K = rounds_for(alpha0, 1.0 / (70.0 * kappa));
      out.alpha = std::pow(alpha0, out.K);
      sm = s;
      if (r > 1.0 / 200.0)
        out.warnings.push_back("beta/sigma = " + std::to_string(r) +
                               " exceeds 1/200; the variance-reduced guarantee does not apply");
      if (1.0 - 4.0 * r > 0) {
        out.svrg_delta = (1.0 - 4.0 * r) / (40.0 * L);
        out.svrg_S = static_cast<int>(std::ceil(160.0 * kappa / std::pow(1.0 - 4.0 * r, 2)));
      } else {
        out.warnings.push_back("SVRG parameters undefined for beta/sigma >= 1/4");
      }
      const double r2 = 8.0 * r * r;
      if (1.0 - r2 > 0) {
        out.sarah_delta = (2.0 / L) * (1.0 - r2) / (9.0 - r2);
        out.sarah_S = static_cast<int>(std::ceil((2.0 * L / s) * (9.0 - r2) / std::pow(1.0 - r2, 2)));
      } else {
        out.warnings.push_back("SARAH parameters undefined for 8 (beta/sigma)^2 >= 1");
      }
      break;
    }
  }
  out.mu = std::max(0.0, sm - s);
  return out;
}

LyapunovReport lyapunov_check(const std::vector<Vector>& trace, const Matrix& G, double slack) {
  LyapunovReport rep;
  rep.worst_margin = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t < trace.size(); ++t) {
    if (trace[t].size() != G.rows() || trace[t - 1].size() != G.cols())
      throw DimensionError("trace vectors do not match the Lyapunov matrix");
    const Vector bound = G * trace[t - 1];
    for (Eigen::Index i = 0; i < bound.size(); ++i) {
      const double margin = trace[t](i) - bound(i);
      rep.worst_margin = std::max(rep.worst_margin, margin);
      if (rep.pass && margin > slack) {
        rep.pass = false;
        rep.t = static_cast<int>(t);
        rep.component = static_cast<int>(i);
        rep.excess = margin - slack;
      }
    }
  }
  if (trace.size() < 2) rep.worst_margin = 0.0;
  return rep;
}

}  // namespace netdist
