#include "taskgeo/friction.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "taskgeo/error.hpp"

namespace taskgeo {

namespace {

struct Symmetrized {
  Eigen::MatrixXd zeta;
  double min_eigenvalue_raw;
};

// (Z + Z^T)/2 with negative eigenvalues clamped to zero.
Symmetrized symmetrize_psd(const Eigen::MatrixXd& raw) {
  const Eigen::MatrixXd sym = 0.5 * (raw + raw.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd values = eig.eigenvalues();
  Symmetrized out{sym, values.minCoeff()};
  if (out.min_eigenvalue_raw < 0.0) {
    const Eigen::VectorXd clamped = values.cwiseMax(0.0);
    out.zeta = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
    out.zeta = 0.5 * (out.zeta + out.zeta.transpose());
  }
  return out;
}

std::size_t fft_length(std::size_t n) {
  std::size_t len = 1;
  while (len < n) len <<= 1;
  return len;
}

void check_series(Eigen::Index n, int max_lag) {
  if (n == 0) throw DomainError("empty series");
  if (max_lag < 0) throw DomainError("maximum lag must be non-negative");
  if (n <= max_lag) {
    throw DomainError("series length " + std::to_string(n) + " must exceed the maximum lag " +
                      std::to_string(max_lag));
  }
}

}  // namespace

FrictionTensor friction_exact(const TabularMdp& mdp, const SoftSolution& solution,
                              const StationaryDist& stationary, int max_lag, double beta,
                              double stationarity_tol) {
  if (max_lag < 0) throw DomainError("maximum lag must be non-negative");
  if (!std::isfinite(beta)) throw DomainError("beta must be finite");
  if (stationary.rho.size() != mdp.n_pairs()) {
    throw DimensionError("stationary distribution must cover every state-action pair");
  }
  const PolicyChain chain(mdp, solution.policy);
  const double residual = stationarity_residual(chain, stationary.rho);
  if (residual > stationarity_tol) {
    throw DomainError("distribution is not stationary for the policy chain (TV residual " +
                      std::to_string(residual) + ")");
  }

  const Eigen::MatrixXd& phi = mdp.features();
  const Eigen::RowVectorXd mean = stationary.rho.transpose() * phi;
  const Eigen::MatrixXd centered = phi.rowwise() - mean;
  const int dim = mdp.feature_dim();

  // Column j of `weighted` is rho * dphi_j pushed forward t steps.
  Eigen::MatrixXd weighted = stationary.rho.asDiagonal() * centered;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(dim, dim);
  double tail = 0.0;
  for (int t = 0; t <= max_lag; ++t) {
    const Eigen::MatrixXd term = centered.transpose() * weighted;
    sum += term;
    tail = term.norm();
    if (t == max_lag) break;
    for (int j = 0; j < dim; ++j) weighted.col(j) = chain.push_forward(weighted.col(j));
  }

  auto sym = symmetrize_psd(beta * sum);
  FrictionTensor out;
  out.zeta = std::move(sym.zeta);
  out.min_eigenvalue_raw = sym.min_eigenvalue_raw;
  out.truncation_lag = max_lag;
  out.beta = beta;
  out.tail = std::abs(beta) * tail;
  return out;
}

std::vector<Eigen::MatrixXd> lagged_covariances(const Eigen::MatrixXd& series, int max_lag) {
  const Eigen::Index n = series.rows();
  check_series(n, max_lag);
  const Eigen::Index dim = series.cols();
  if (dim == 0) throw DimensionError("series has no channels");

  const Eigen::MatrixXd centered = series.rowwise() - series.colwise().mean();
  const std::size_t len = fft_length(static_cast<std::size_t>(n + max_lag + 1));

  Eigen::FFT<double> fft;
  std::vector<std::vector<std::complex<double>>> spectra(static_cast<std::size_t>(dim));
  for (Eigen::Index i = 0; i < dim; ++i) {
    std::vector<std::complex<double>> padded(len, 0.0);
    for (Eigen::Index k = 0; k < n; ++k) padded[static_cast<std::size_t>(k)] = centered(k, i);
    fft.fwd(spectra[static_cast<std::size_t>(i)], padded);
  }

  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(max_lag) + 1,
                                   Eigen::MatrixXd::Zero(dim, dim));
  std::vector<std::complex<double>> product(len);
  std::vector<std::complex<double>> corr;
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      const auto& xi = spectra[static_cast<std::size_t>(i)];
      const auto& xj = spectra[static_cast<std::size_t>(j)];
      // sum_k x_i(k+t) x_j(k)  <->  X_i conj(X_j)
      for (std::size_t f = 0; f < len; ++f) product[f] = xi[f] * std::conj(xj[f]);
      fft.inv(corr, product);
      for (int t = 0; t <= max_lag; ++t) {
        out[static_cast<std::size_t>(t)](i, j) =
            corr[static_cast<std::size_t>(t)].real() / static_cast<double>(n);
      }
    }
  }
  return out;
}

std::vector<double> autocovariance(std::span<const double> series, int max_lag) {
  const auto n = static_cast<Eigen::Index>(series.size());
  check_series(n, max_lag);
  double mean = 0.0;
  for (double x : series) mean += x;
  mean /= static_cast<double>(n);

  const std::size_t len = fft_length(static_cast<std::size_t>(n + max_lag + 1));
  std::vector<double> padded(len, 0.0);
  for (std::size_t k = 0; k < series.size(); ++k) padded[k] = series[k] - mean;

  // plans are cached per length inside the FFT object
  thread_local Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, padded);
  for (auto& x : spectrum) x = std::norm(x);
  std::vector<double> corr;
  fft.inv(corr, spectrum);

  std::vector<double> out(static_cast<std::size_t>(max_lag) + 1);
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = corr[t] / static_cast<double>(n);
  return out;
}

FrictionTensor friction_sampled(const Eigen::MatrixXd& series, int max_lag) {
  if (max_lag < 1) throw DomainError("maximum lag must be at least one");
  const auto lags = lagged_covariances(series, max_lag);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(series.cols(), series.cols());
  for (const auto& c : lags) sum += c;
  auto sym = symmetrize_psd(sum);
  FrictionTensor out;
  out.zeta = std::move(sym.zeta);
  out.min_eigenvalue_raw = sym.min_eigenvalue_raw;
  out.truncation_lag = max_lag;
  out.tail = lags.back().norm();
  return out;
}

double friction_sampled(std::span<const double> series, int max_lag) {
  if (max_lag < 1) throw DomainError("maximum lag must be at least one");
  // Scalar case: no symmetrization or clamping; a negative lag sum is a
  // legitimate estimate (e.g. anti-correlated streams).
  const auto c = autocovariance(series, max_lag);
  double sum = 0.0;
  for (double v : c) sum += v;
  return sum;
}

void FrictionField::validate() const {
  grid.validate();
  if (tensors.size() != grid.size()) {
    throw DimensionError("friction field needs exactly one tensor per grid node");
  }
  for (const auto& z : tensors) {
    if (z.rows() != grid.dim() || z.cols() != grid.dim()) {
      throw DimensionError("friction tensor dimension differs from the grid dimension");
    }
  }
  if (!diagnostics.empty() && diagnostics.size() != tensors.size()) {
    throw DimensionError("diagnostics must be empty or one per node");
  }
}

Eigen::MatrixXd FrictionField::interpolate(const TaskParams& lambda) const {
  const int dim = grid.dim();
  if (lambda.size() != dim) throw DimensionError("task parameter dimension mismatch");
  if (!grid.contains(lambda, 1e-9)) {
    throw DomainError("point lies outside the friction field's lambda grid");
  }
  std::vector<int> base(static_cast<std::size_t>(dim));
  std::vector<double> frac(static_cast<std::size_t>(dim));
  for (int axis = 0; axis < dim; ++axis) {
    const auto a = static_cast<std::size_t>(axis);
    const double u = (lambda(axis) - grid.lower[a]) / grid.spacing(axis);
    const int cell = std::clamp(static_cast<int>(std::floor(u)), 0, grid.resolution[a] - 2);
    base[a] = cell;
    frac[a] = std::clamp(u - cell, 0.0, 1.0);
  }

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
  std::vector<int> corner(static_cast<std::size_t>(dim));
  for (unsigned mask = 0; mask < (1u << dim); ++mask) {
    double weight = 1.0;
    for (int axis = 0; axis < dim; ++axis) {
      const auto a = static_cast<std::size_t>(axis);
      const bool upper = (mask >> axis) & 1u;
      corner[a] = base[a] + (upper ? 1 : 0);
      weight *= upper ? frac[a] : 1.0 - frac[a];
    }
    if (weight == 0.0) continue;
    out += weight * tensors[grid.ravel(corner)];
  }
  return out;
}

std::vector<double> gaussian_filter(const std::vector<double>& values,
                                    const std::vector<int>& shape,
                                    const std::vector<double>& sigma_cells) {
  if (shape.size() != sigma_cells.size()) throw DimensionError("sigma per axis required");
  std::size_t total = 1;
  for (int n : shape) total *= static_cast<std::size_t>(n);
  if (total != values.size()) throw DimensionError("values do not match grid shape");

  std::vector<double> current = values;
  std::vector<double> next(values.size());
  std::size_t stride = total;
  for (std::size_t axis = 0; axis < shape.size(); ++axis) {
    const int n = shape[axis];
    stride /= static_cast<std::size_t>(n);
    const double sigma = sigma_cells[axis];
    if (!(sigma >= 0.0)) throw DomainError("smoothing width must be non-negative");
    if (sigma == 0.0) continue;

    const int radius = static_cast<int>(4.0 * sigma + 0.5);
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double norm = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      const double w = std::exp(-0.5 * k * k / (sigma * sigma));
      kernel[static_cast<std::size_t>(k + radius)] = w;
      norm += w;
    }
    for (double& w : kernel) w /= norm;

    // half-sample reflection: (d c b a | a b c d | d c b a)
    auto reflect = [n](int i) {
      const int period = 2 * n;
      i %= period;
      if (i < 0) i += period;
      return i < n ? i : period - 1 - i;
    };

    const std::size_t block = stride * static_cast<std::size_t>(n);
    for (std::size_t outer = 0; outer < total; outer += block) {
      for (std::size_t inner = 0; inner < stride; ++inner) {
        const std::size_t origin = outer + inner;
        for (int i = 0; i < n; ++i) {
          double acc = 0.0;
          for (int k = -radius; k <= radius; ++k) {
            const auto j = static_cast<std::size_t>(reflect(i + k));
            acc += kernel[static_cast<std::size_t>(k + radius)] * current[origin + j * stride];
          }
          next[origin + static_cast<std::size_t>(i) * stride] = acc;
        }
      }
    }
    current.swap(next);
  }
  return current;
}

ScalarField scalar_field(const FrictionField& field, double sigma) {
  field.validate();
  if (!(sigma >= 0.0)) throw DomainError("smoothing width must be non-negative");
  ScalarField out;
  out.trace.reserve(field.tensors.size());
  out.log_trace.reserve(field.tensors.size());
  for (const auto& z : field.tensors) {
    const double tr = std::max(z.trace(), kTraceFloor);
    out.trace.push_back(tr);
    out.log_trace.push_back(std::log(tr));
  }
  std::vector<double> sigma_cells;
  for (int axis = 0; axis < field.dim(); ++axis) {
    sigma_cells.push_back(sigma / field.grid.spacing(axis));
  }
  const auto smoothed = gaussian_filter(out.trace, field.grid.resolution, sigma_cells);
  out.log_trace_smoothed.reserve(smoothed.size());
  for (double v : smoothed) out.log_trace_smoothed.push_back(std::log(std::max(v, kTraceFloor)));
  return out;
}

}  // namespace taskgeo
