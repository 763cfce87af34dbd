#include "pls/gp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pls::gp {
namespace {

constexpr double kNegativeVarianceTolerance = 1e-9;

bool finite(const TargetReturn& z) { return std::isfinite(z.reward) && std::isfinite(z.cost); }

Eigen::MatrixXd kernel_matrix(std::span<const TargetReturn> a, std::span<const TargetReturn> b,
                              const KernelSpec& spec) {
  Eigen::MatrixXd k(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rbf_kernel(a[i], b[j], spec);
  return k;
}

std::string condition_diagnostics(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  std::ostringstream os;
  os << "n=" << m.rows();
  if (eig.info() == Eigen::Success && m.rows() > 0) {
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    os << ", min eigenvalue=" << lo << ", max eigenvalue=" << hi;
    if (lo > 0.0) os << ", condition number=" << hi / lo;
  }
  return os.str();
}

}  // namespace

void KernelSpec::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!ok(lengthscale_r) || !ok(lengthscale_g) || !ok(signal_variance))
    throw std::invalid_argument("KernelSpec: lengthscales and signal variance must be positive and finite");
}

double rbf_kernel(const TargetReturn& a, const TargetReturn& b, const KernelSpec& spec) {
  if (!finite(a) || !finite(b)) throw std::invalid_argument("rbf_kernel: non-finite input");
  const double dr = (a.reward - b.reward) / spec.lengthscale_r;
  const double dg = (a.cost - b.cost) / spec.lengthscale_g;
  return spec.signal_variance * std::exp(-0.5 * (dr * dr + dg * dg));
}

double noise_jitter(const KernelSpec& spec, double noise_variance) noexcept {
  return noise_variance < 1e-10 ? 1e-10 * spec.signal_variance : 0.0;
}

std::size_t GpModel::clamp_warnings() const noexcept { return clamp_warnings_->load(); }

GpModel fit_posterior(std::vector<TargetReturn> inputs, std::vector<double> observations,
                      double noise_variance, const KernelSpec& spec, double prior_mean) {
  spec.validate();
  if (inputs.size() != observations.size())
    throw std::invalid_argument("fit_posterior: inputs and observations differ in length");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
    throw std::invalid_argument("fit_posterior: noise variance must be finite and nonnegative");
  for (const auto& z : inputs)
    if (!finite(z)) throw std::invalid_argument("fit_posterior: non-finite input");
  for (double y : observations)
    if (!std::isfinite(y)) throw std::invalid_argument("fit_posterior: non-finite observation");

  GpModel model;
  model.noise_variance_ = noise_variance;
  model.jitter_ = noise_jitter(spec, noise_variance);
  model.prior_mean_ = prior_mean;
  model.kernel_ = spec;

  const auto n = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd k = kernel_matrix(inputs, inputs, spec);
  k.diagonal().array() += noise_variance + model.jitter_;

  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success)
    throw NumericalError("fit_posterior: kernel matrix is not positive definite (" +
                         condition_diagnostics(k) + ")");
  model.factor_ = llt.matrixL();

  Eigen::VectorXd centered(n);
  for (Eigen::Index i = 0; i < n; ++i)
    centered(i) = observations[static_cast<std::size_t>(i)] - prior_mean;
  model.weights_ = llt.solve(centered);

  model.inputs_ = std::move(inputs);
  model.observations_ = std::move(observations);
  return model;
}

Prediction predict(const GpModel& model, const TargetReturn& z) {
  return predict(model, std::span<const TargetReturn>(&z, 1)).front();
}

std::vector<Prediction> predict(const GpModel& model, std::span<const TargetReturn> queries) {
  std::vector<Prediction> out(queries.size());
  const double prior_var = model.kernel_.signal_variance;
  if (model.size() == 0) {
    for (auto& p : out) p = {model.prior_mean_, prior_var};
    return out;
  }

  const Eigen::MatrixXd cross = kernel_matrix(model.inputs_, queries, model.kernel_);
  const Eigen::VectorXd means = cross.transpose() * model.weights_;
  const Eigen::MatrixXd v =
      model.factor_.triangularView<Eigen::Lower>().solve(cross);
  const Eigen::VectorXd explained = v.colwise().squaredNorm().transpose();

  std::size_t warnings = 0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    const double var = rbf_kernel(queries[i], queries[i], model.kernel_) - explained(idx);
    if (var < -kNegativeVarianceTolerance) ++warnings;
    out[i] = {model.prior_mean_ + means(idx), std::max(var, 0.0)};
  }
  if (warnings > 0) model.clamp_warnings_->fetch_add(warnings);
  return out;
}

std::vector<double> sample_prior_path(const KernelSpec& spec, std::span<const TargetReturn> grid,
                                      std::uint64_t seed) {
  spec.validate();
  if (grid.empty()) throw std::invalid_argument("sample_prior_path: empty grid");

  const Eigen::MatrixXd k = kernel_matrix(grid, grid, spec);
  const auto n = k.rows();

  Eigen::MatrixXd factor;
  bool factored = false;
  for (double jitter = 1e-10; jitter <= 1e-6 * 1.0000001; jitter *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter * spec.signal_variance;
    Eigen::LLT<Eigen::MatrixXd> llt(kj);
    if (llt.info() == Eigen::Success) {
      factor = llt.matrixL();
      factored = true;
      break;
    }
  }
  if (!factored)
    throw NumericalError("sample_prior_path: grid covariance is not positive definite (" +
                         condition_diagnostics(k) + ")");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = normal(rng);
  const Eigen::VectorXd draw = factor.triangularView<Eigen::Lower>() * w;
  return {draw.data(), draw.data() + n};
}

}  // namespace pls::gp
