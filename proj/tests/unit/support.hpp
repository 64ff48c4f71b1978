#pragma once

#include "glass/numeric.hpp"
#include "glass/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <utility>

namespace glass::testing {

/// Random labeled dataset with i.i.d. N(0, scale^2) epochs.
inline Dataset random_dataset(int num_channels, int num_samples, int num_halves, std::uint64_t seed,
                              double scale = 1.0, bool labeled = true) {
  Rng rng = make_rng(seed);
  Dataset data;
  data.num_channels = num_channels;
  data.num_samples = num_samples;
  data.sample_rate = 32.0;
  data.channel_names = default_channel_names(num_channels);
  for (int i = 0; i < num_halves; ++i) {
    HalfSequence half;
    half.key = {i / 2 + 1, 1, i % 2 == 0 ? HalfType::Row : HalfType::Column};
    for (auto& epoch : half.epochs) {
      epoch.resize(num_channels, num_samples);
      for (Eigen::Index k = 0; k < epoch.size(); ++k) epoch.data()[k] = scale * standard_normal(rng);
    }
    if (labeled) half.target = 1 + static_cast<int>(rng() % 6);
    data.halves.push_back(std::move(half));
  }
  return data;
}

/// Nodes and weights of an n-point Gauss rule from its Jacobi matrix.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> golub_welsch(const Eigen::VectorXd& off_diagonal, double mu0) {
  const Eigen::Index n = off_diagonal.size() + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    jacobi(k, k + 1) = off_diagonal[k];
    jacobi(k + 1, k) = off_diagonal[k];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  Eigen::VectorXd weights = mu0 * solver.eigenvectors().row(0).transpose().array().square();
  return {solver.eigenvalues(), weights};
}

/// Probabilists' Gauss-Hermite rule: integrates f(x) N(x; 0, 1) dx.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_hermite(int n) {
  Eigen::VectorXd b(n - 1);
  for (int k = 1; k < n; ++k) b[k - 1] = std::sqrt(static_cast<double>(k));
  return golub_welsch(b, 1.0);
}

/// Gauss-Legendre rule on (0, 1).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre01(int n) {
  Eigen::VectorXd b(n - 1);
  for (int k = 1; k < n; ++k) b[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  auto [x, w] = golub_welsch(b, 2.0);
  return {((x.array() + 1.0) / 2.0).matrix(), (w / 2.0).eval()};
}

}  // namespace glass::testing
