#include "netdist/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace netdist {

Matrix LossOracle::hessian(const Vector&) const {
  throw Error("this oracle has no Hessian");
}

double symmetric_norm(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// --- synthetic data -------------------------------------------------------------

SyntheticData generate_synthetic(const SyntheticParams& p) {
  if (p.m < 1 || p.d < 1 || p.n < 1) throw ConfigError("synthetic data needs m, d, n >= 1");
  if (p.noise_std < 0) throw ConfigError("noise_std must be >= 0");
  Vector scale(p.d);
  for (int i = 0; i < p.d; ++i) scale(i) = std::sqrt(std::pow(i + 1.0, -p.varrho));

  SyntheticData out;
  std::normal_distribution<double> gauss(0.0, 1.0);
  {
    std::mt19937_64 rng(p.seed ^ 0x9E3779B97F4A7C15ULL);
    out.x0.resize(p.d);
    for (int i = 0; i < p.d; ++i) out.x0(i) = gauss(rng);
  }
  const int distinct = p.identical_shards ? 1 : p.n;
  for (int j = 0; j < distinct; ++j) {
    std::mt19937_64 rng(p.seed ^ static_cast<std::uint64_t>(j));
    Shard s;
    s.agent = j;
    s.A.resize(p.m, p.d);
    for (int r = 0; r < p.m; ++r)
      for (int c = 0; c < p.d; ++c) s.A(r, c) = scale(c) * gauss(rng);
    s.b = s.A * out.x0;
    for (int r = 0; r < p.m; ++r) s.b(r) += p.noise_std * gauss(rng);
    out.shards.push_back(std::move(s));
  }
  for (int j = distinct; j < p.n; ++j) {
    Shard s = out.shards.front();
    s.agent = j;
    out.shards.push_back(std::move(s));
  }
  return out;
}

double varrho_for_condition(double kappa, int d) {
  if (kappa < 1 || d < 2) throw DomainError("varrho_for_condition needs kappa >= 1 and d >= 2");
  return std::log(kappa) / std::log(static_cast<double>(d));
}

std::vector<Shard> partition(const Dataset& data, int n) {
  if (n < 1) throw ConfigError("partition needs n >= 1");
  const int N = data.size();
  if (N % n != 0)
    throw ConfigError(std::to_string(N) + " samples cannot be split evenly over " +
                      std::to_string(n) + " agents");
  const int m = N / n;
  std::vector<Shard> shards;
  for (int j = 0; j < n; ++j) {
    Shard s;
    s.agent = j;
    s.A = data.A.middleRows(j * m, m);
    s.b = data.b.segment(j * m, m);
    for (int r = 0; r < m; ++r) s.indices.push_back(j * m + r);
    shards.push_back(std::move(s));
  }
  return shards;
}

// --- quadratic -------------------------------------------------------------------

QuadraticOracle::QuadraticOracle(const Shard& shard)
    : samples_(true), A_(shard.A), b_(shard.b) {
  if (A_.rows() == 0) throw DimensionError("empty shard");
  if (b_.size() != A_.rows()) throw DimensionError("shard targets do not match rows");
  const double m = static_cast<double>(A_.rows());
  H_ = A_.transpose() * A_ / m;
  c_ = A_.transpose() * b_ / m;
  r_ = b_.squaredNorm() / (2.0 * m);
  init_constants();
}

QuadraticOracle::QuadraticOracle(Matrix H, Vector c, double r)
    : H_(std::move(H)), c_(std::move(c)), r_(r) {
  if (H_.rows() != H_.cols() || H_.rows() != c_.size())
    throw DimensionError("quadratic oracle: H and c shapes disagree");
  init_constants();
}

void QuadraticOracle::init_constants() {
  H_ = 0.5 * (H_ + H_.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(H_, Eigen::EigenvaluesOnly);
  sigma_ = std::max(0.0, es.eigenvalues()(0));
  L_ = es.eigenvalues()(es.eigenvalues().size() - 1);
  // a single sample (a, b) has Hessian a a^T
  sample_L_ = samples_ ? A_.rowwise().squaredNorm().maxCoeff() : L_;
}

double QuadraticOracle::value(const Vector& x) const {
  return 0.5 * x.dot(H_ * x) - c_.dot(x) + r_;
}

Vector QuadraticOracle::gradient(const Vector& x) const { return H_ * x - c_; }

Vector QuadraticOracle::sample_gradient(const Vector& x, int i) const {
  if (!samples_) return gradient(x);
  const auto a = A_.row(i).transpose();
  return a * (a.dot(x) - b_(i));
}

// --- logistic --------------------------------------------------------------------

namespace {

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

}  // namespace

LogisticOracle::LogisticOracle(const Shard& shard, double lambda)
    : A_(shard.A), b_(shard.b), lambda_(lambda) {
  if (lambda < 0) throw ConfigError("logistic lambda must be >= 0");
  if (A_.rows() == 0 || b_.size() != A_.rows()) throw DimensionError("bad logistic shard");
  for (Eigen::Index i = 0; i < b_.size(); ++i)
    if (b_(i) != 0.0 && b_(i) != 1.0)
      throw ValidationError("logistic labels must be 0 or 1 (agent " +
                            std::to_string(shard.agent) + ", row " + std::to_string(i) + ")");
  const Matrix gram = A_.transpose() * A_;
  L_ = lambda_ + symmetric_norm(gram) / (4.0 * static_cast<double>(A_.rows()));
  sample_L_ = lambda_ + A_.rowwise().squaredNorm().maxCoeff() / 4.0;
}

double LogisticOracle::value(const Vector& x) const {
  const Vector t = A_ * x;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) acc += softplus(t(i)) - b_(i) * t(i);
  return acc / static_cast<double>(t.size()) + 0.5 * lambda_ * x.squaredNorm();
}

Vector LogisticOracle::gradient(const Vector& x) const {
  Vector r = A_ * x;
  for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = sigmoid(r(i)) - b_(i);
  return A_.transpose() * r / static_cast<double>(r.size()) + lambda_ * x;
}

Vector LogisticOracle::sample_gradient(const Vector& x, int i) const {
  const auto a = A_.row(i).transpose();
  return a * (sigmoid(a.dot(x)) - b_(i)) + lambda_ * x;
}

Matrix LogisticOracle::hessian(const Vector& x) const {
  const Vector t = A_ * x;
  Vector w(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double p = sigmoid(t(i));
    w(i) = p * (1.0 - p);
  }
  Matrix h = A_.transpose() * w.asDiagonal() * A_ / static_cast<double>(t.size());
  h.diagonal().array() += lambda_;
  return h;
}

// --- averaging ---------------------------------------------------------------------

namespace {

class AverageOracle final : public LossOracle {
 public:
  explicit AverageOracle(OracleList parts) : parts_(std::move(parts)) {
    for (const auto& p : parts_) {
      sigma_ = std::min(sigma_, p->sigma());
      L_ = std::max(L_, p->smoothness());
    }
  }
  int dim() const override { return parts_.front()->dim(); }
  int num_samples() const override {
    int total = 0;
    for (const auto& p : parts_) total += p->num_samples();
    return total;
  }
  double value(const Vector& x) const override {
    double acc = 0.0;
    for (const auto& p : parts_) acc += p->value(x);
    return acc / static_cast<double>(parts_.size());
  }
  Vector gradient(const Vector& x) const override {
    Vector g = Vector::Zero(x.size());
    for (const auto& p : parts_) g += p->gradient(x);
    return g / static_cast<double>(parts_.size());
  }
  // Samples are indexed agent-major. Rescaled so the mean over all samples is
  // the average of the agents' gradients even when shard sizes differ.
  Vector sample_gradient(const Vector& x, int i) const override {
    const double total = num_samples();
    for (const auto& p : parts_) {
      if (i < p->num_samples())
        return p->sample_gradient(x, i) *
               (total / (static_cast<double>(p->num_samples()) * static_cast<double>(parts_.size())));
      i -= p->num_samples();
    }
    throw DimensionError("sample index out of range");
  }
  bool has_hessian() const override {
    return std::all_of(parts_.begin(), parts_.end(), [](auto& p) { return p->has_hessian(); });
  }
  Matrix hessian(const Vector& x) const override {
    Matrix h = Matrix::Zero(dim(), dim());
    for (const auto& p : parts_) h += p->hessian(x);
    return h / static_cast<double>(parts_.size());
  }
  // The average is at least as well conditioned as its worst part.
  double sigma() const override { return sigma_; }
  double smoothness() const override { return L_; }

 private:
  OracleList parts_;
  double sigma_ = std::numeric_limits<double>::infinity();
  double L_ = 0.0;
};

}  // namespace

OraclePtr average_oracle(const OracleList& oracles) {
  if (oracles.empty()) throw ValidationError("average of an empty oracle list");
  bool all_quadratic = true;
  for (const auto& o : oracles)
    if (!dynamic_cast<const QuadraticOracle*>(o.get())) all_quadratic = false;
  if (!all_quadratic) return std::make_shared<AverageOracle>(oracles);
  const int d = oracles.front()->dim();
  Matrix H = Matrix::Zero(d, d);
  Vector c = Vector::Zero(d);
  double r = 0.0;
  for (const auto& o : oracles) {
    const auto& q = static_cast<const QuadraticOracle&>(*o);
    if (q.dim() != d) throw DimensionError("oracles disagree on dimension");
    H += q.H();
    c += q.c();
    r += q.offset();
  }
  const double n = static_cast<double>(oracles.size());
  return std::make_shared<QuadraticOracle>(H / n, c / n, r / n);
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "quadratic" || name == "least_squares") return LossKind::quadratic;
  if (name == "logistic") return LossKind::logistic;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

OracleList make_oracles(const std::vector<Shard>& shards, LossKind kind, double lambda) {
  OracleList out;
  out.reserve(shards.size());
  for (const auto& s : shards) {
    if (kind == LossKind::quadratic)
      out.push_back(std::make_shared<QuadraticOracle>(s));
    else
      out.push_back(std::make_shared<LogisticOracle>(s, lambda));
  }
  return out;
}

// --- regularizer -------------------------------------------------------------------

Vector l1_prox(const Vector& v, double tau) {
  if (tau < 0) throw DomainError("prox step must be >= 0");
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i)) - tau;
    out(i) = a > 0 ? std::copysign(a, v(i)) : 0.0;
  }
  return out;
}

Vector Regularizer::prox(const Vector& v, double tau) const {
  if (zero()) return v;
  return l1_prox(v, tau * l1);
}

// --- constants ---------------------------------------------------------------------

ProblemConstants measure_constants(const OracleList& oracles, ConstantsMode mode,
                                   const std::vector<Vector>& probes) {
  if (oracles.empty()) throw ValidationError("measure_constants: empty oracle list");
  ProblemConstants pc;
  const int d = oracles.front()->dim();
  const double n = static_cast<double>(oracles.size());
  if (mode == ConstantsMode::exact) {
    Matrix Hbar = Matrix::Zero(d, d);
    for (const auto& o : oracles) {
      const Matrix* h = o->constant_hessian();
      if (!h) throw ValidationError("exact constants need quadratic oracles");
      Hbar += *h;
    }
    Hbar /= n;
    pc.sigma = std::numeric_limits<double>::infinity();
    for (const auto& o : oracles) {
      pc.sigma = std::min(pc.sigma, o->sigma());
      pc.L = std::max(pc.L, o->smoothness());
      pc.L_sample = std::max(pc.L_sample, o->sample_smoothness());
      pc.beta = std::max(pc.beta, symmetric_norm(*o->constant_hessian() - Hbar));
    }
    pc.Hbar = std::move(Hbar);
  } else {
    pc.sigma = std::numeric_limits<double>::infinity();
    for (const auto& o : oracles) {
      if (!o->has_hessian()) throw ValidationError("sampled beta needs Hessians");
      pc.sigma = std::min(pc.sigma, o->sigma());
      pc.L = std::max(pc.L, o->smoothness());
      pc.L_sample = std::max(pc.L_sample, o->sample_smoothness());
    }
    std::vector<Vector> pts = probes;
    if (pts.empty()) pts.push_back(Vector::Zero(d));
    for (const auto& x : pts) {
      std::vector<Matrix> hs;
      Matrix Hbar = Matrix::Zero(d, d);
      for (const auto& o : oracles) {
        hs.push_back(o->hessian(x));
        Hbar += hs.back();
      }
      Hbar /= n;
      for (const auto& h : hs) pc.beta = std::max(pc.beta, symmetric_norm(h - Hbar));
    }
    pc.beta_estimated = true;
  }
  pc.kappa = pc.sigma > 0 ? pc.L / pc.sigma : std::numeric_limits<double>::infinity();
  return pc;
}

}  // namespace netdist
