#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "pls/types.hpp"

namespace pls::gp {

/// Anisotropic squared-exponential kernel over (R, G).
struct KernelSpec {
  double lengthscale_r = 1.0;
  double lengthscale_g = 1.0;
  double signal_variance = 1.0;

  /// Throws std::invalid_argument unless every field is positive and finite.
  void validate() const;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

double rbf_kernel(const TargetReturn& a, const TargetReturn& b, const KernelSpec& spec);

/// Diagonal jitter used when the noise variance is (numerically) zero.
double noise_jitter(const KernelSpec& spec, double noise_variance) noexcept;

/// Exact GP posterior for one objective with a constant prior mean.
///
/// Immutable once fitted. The lower Cholesky factor L satisfies
/// L * L^T = K + (noise_variance + jitter) * I over the stored inputs.
class GpModel {
 public:
  GpModel() = default;

  std::size_t size() const noexcept { return inputs_.size(); }
  const std::vector<TargetReturn>& inputs() const noexcept { return inputs_; }
  const std::vector<double>& observations() const noexcept { return observations_; }
  double noise_variance() const noexcept { return noise_variance_; }
  double jitter() const noexcept { return jitter_; }
  double prior_mean() const noexcept { return prior_mean_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  const Eigen::MatrixXd& factor() const noexcept { return factor_; }

  /// Number of predictions whose raw variance fell below -1e-9 before clamping.
  std::size_t clamp_warnings() const noexcept;

 private:
  friend GpModel fit_posterior(std::vector<TargetReturn>, std::vector<double>, double,
                               const KernelSpec&, double);
  friend Prediction predict(const GpModel&, const TargetReturn&);
  friend std::vector<Prediction> predict(const GpModel&, std::span<const TargetReturn>);

  std::vector<TargetReturn> inputs_;
  std::vector<double> observations_;
  double noise_variance_ = 0.0;
  double jitter_ = 0.0;
  double prior_mean_ = 0.0;
  KernelSpec kernel_;
  Eigen::MatrixXd factor_;
  Eigen::VectorXd weights_;  // (K + nu^2 I)^{-1} (y - prior_mean)
  std::shared_ptr<std::atomic<std::size_t>> clamp_warnings_ =
      std::make_shared<std::atomic<std::size_t>>(0);
};

/// Fits the posterior. Throws NumericalError (with a conditioning estimate)
/// when K + nu^2 I is not positive definite even after jitter.
GpModel fit_posterior(std::vector<TargetReturn> inputs, std::vector<double> observations,
                      double noise_variance, const KernelSpec& spec, double prior_mean = 0.0);

Prediction predict(const GpModel& model, const TargetReturn& z);

/// Batched prediction; one triangular solve for all query points.
std::vector<Prediction> predict(const GpModel& model, std::span<const TargetReturn> queries);

/// One joint draw from N(0, K_grid + jitter I), deterministic in `seed`.
///
/// Jitter starts at 1e-10 * signal_variance and grows tenfold up to
/// 1e-6 * signal_variance before giving up with NumericalError.
std::vector<double> sample_prior_path(const KernelSpec& spec, std::span<const TargetReturn> grid,
                                      std::uint64_t seed);

}  // namespace pls::gp
