#include "nodal/ensemble.hpp"

#include <cmath>
#include <numbers>

#include "nodal/error.hpp"

namespace nodal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_nonempty(const FrequencySet& freqs) {
  if (freqs.empty()) throw EmptyEnsembleError("empty frequency set (N = 0)");
}

double phase_turns(const IntVector& lambda, std::span<const double> x) {
  double t = 0.0;
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    const double p = static_cast<double>(lambda[k]) * x[k];
    t += p - std::floor(p);
  }
  return t - std::floor(t);
}

TrigField ensemble_field(const FrequencySet& freqs,
                         const std::vector<std::pair<double, double>>& coeffs) {
  const double scale = std::sqrt(2.0 / static_cast<double>(freqs.multiplicity()));
  std::vector<double> a(coeffs.size());
  std::vector<double> b(coeffs.size());
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    a[j] = scale * coeffs[j].first;
    b[j] = -scale * coeffs[j].second;
  }
  return TrigField(freqs.dim, freqs.representatives, std::move(a), std::move(b));
}

}  // namespace

RandomEigenfunction::RandomEigenfunction(std::shared_ptr<const FrequencySet> freqs,
                                         std::vector<std::pair<double, double>> coeffs,
                                         std::uint64_t seed, std::uint64_t stream)
    : freqs_(std::move(freqs)), coeffs_(std::move(coeffs)), seed_(seed), stream_(stream) {
  if (!freqs_) throw DomainError("null frequency set");
  require_nonempty(*freqs_);
  if (coeffs_.size() != freqs_->representatives.size())
    throw DomainError("coefficient count must equal N/2");
  for (const auto& [b, c] : coeffs_)
    if (!std::isfinite(b) || !std::isfinite(c)) throw DomainError("non-finite coefficient");
  field_ = ensemble_field(*freqs_, coeffs_);
}

RandomEigenfunction sample(std::shared_ptr<const FrequencySet> freqs, std::uint64_t seed,
                           std::uint64_t stream) {
  if (!freqs) throw DomainError("null frequency set");
  require_nonempty(*freqs);
  Rng rng(seed, stream);
  std::vector<std::pair<double, double>> coeffs(freqs->representatives.size());
  for (auto& [b, c] : coeffs) {
    b = rng.normal();
    c = rng.normal();
  }
  return RandomEigenfunction(std::move(freqs), std::move(coeffs), seed, stream);
}

CovarianceKernel::CovarianceKernel(std::shared_ptr<const FrequencySet> freqs)
    : freqs_(std::move(freqs)) {
  if (!freqs_) throw DomainError("null frequency set");
  require_nonempty(*freqs_);
  // cos is even, so the sum over Lambda is twice the sum over representatives.
  const double w = 2.0 / static_cast<double>(freqs_->multiplicity());
  field_ = TrigField(freqs_->dim, freqs_->representatives,
                     std::vector<double>(freqs_->representatives.size(), w),
                     std::vector<double>(freqs_->representatives.size(), 0.0));
}

double CovarianceKernel::one_minus_u_squared(std::span<const double> z) const {
  double s2 = 0.0;
  double c2 = 0.0;
  for (const auto& lambda : freqs_->representatives) {
    const double half = std::numbers::pi * phase_turns(lambda, z);
    const double s = std::sin(half);
    const double c = std::cos(half);
    s2 += s * s;
    c2 += c * c;
  }
  // 1 - u = (2/N) sum_Lambda sin^2(theta/2), and each representative stands for two vectors.
  const double w = 4.0 / static_cast<double>(freqs_->multiplicity());
  return (w * s2) * (w * c2);
}

double two_point(const FrequencySet& freqs, std::span<const double> z) {
  require_nonempty(freqs);
  double sum = 0.0;
  for (const auto& lambda : freqs.representatives) sum += std::cos(kTwoPi * phase_turns(lambda, z));
  return 2.0 * sum / static_cast<double>(freqs.multiplicity());
}

Covariance covariance(const FrequencySet& freqs, std::span<const double> z) {
  const double u = two_point(freqs, z);
  Covariance out;
  out.sigma << 1.0, u, u, 1.0;
  out.det = (1.0 - u) * (1.0 + u);
  return out;
}

double direction_average(const FrequencySet& freqs, std::span<const double> xi) {
  if (static_cast<int>(xi.size()) != freqs.dim) throw DomainError("direction has wrong dimension");
  double sum = 0.0;
  for (const auto& lambda : freqs.vectors) {
    double p = 0.0;
    for (int k = 0; k < freqs.dim; ++k) p += static_cast<double>(lambda[k]) * xi[k];
    sum += p * p;
  }

  bool integral = true;
  for (double v : xi) integral = integral && std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e6;
  if (integral) {
    IntVector ix(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) ix[k] = static_cast<std::int64_t>(xi[k]);
    BigInt lhs = 0;
    BigInt total_norm = 0;
    for (const auto& lambda : freqs.vectors) {
      BigInt p = 0;
      BigInt n = 0;
      for (int k = 0; k < freqs.dim; ++k) {
        p += BigInt(lambda[k]) * ix[k];
        n += BigInt(lambda[k]) * lambda[k];
      }
      lhs += p * p;
      total_norm += n;
    }
    BigInt xi2 = 0;
    for (auto v : ix) xi2 += BigInt(v) * v;
    if (lhs * freqs.dim != total_norm * xi2)
      throw InvariantViolation("direction average differs from (1/d) sum |lambda|^2 |xi|^2");
    return lhs.convert_to<double>();
  }
  return sum;
}

Eigen::VectorXd jacobian_singular_values(const FrequencySet& freqs, std::span<const double> x) {
  require_nonempty(freqs);
  const int d = freqs.dim;
  const auto& reps = freqs.representatives;
  Eigen::MatrixXd J(d + 1, 2 * static_cast<Eigen::Index>(reps.size()));
  for (std::size_t j = 0; j < reps.size(); ++j) {
    const double theta = kTwoPi * phase_turns(reps[j], x);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const auto col = static_cast<Eigen::Index>(2 * j);
    J(0, col) = c;
    J(0, col + 1) = -s;
    for (int k = 0; k < d; ++k) {
      const auto l = static_cast<double>(reps[j][k]);
      J(k + 1, col) = -s * l;
      J(k + 1, col + 1) = -c * l;
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  return svd.singularValues();
}

int jacobian_rank(const FrequencySet& freqs, std::span<const double> x) {
  const Eigen::VectorXd sv = jacobian_singular_values(freqs, x);
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double tol = 1e-8 * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return rank;
}

nlohmann::json to_json(const RandomEigenfunction& f) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& [b, c] : f.coeffs()) coeffs.push_back({b, c});
  return {{"dim", f.dim()},
          {"energy", f.frequencies().energy},
          {"seed", f.seed()},
          {"stream", f.stream()},
          {"coeffs", std::move(coeffs)}};
}

}  // namespace nodal
