#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>

#include "infgame/market.hpp"

namespace infgame {

/// Row-stochastic, non-negative influence matrix W; w_ji is the weight
/// agent j places on agent i's strategy.
class InfluenceNetwork {
 public:
  static constexpr double kRowSumTolerance = 1e-9;

  /// Accepts W as given. Rows are never renormalized.
  static InfluenceNetwork validate(Matrix W) {
    if (W.rows() != W.cols() || W.rows() == 0) {
      throw NetworkError("adjacency matrix must be non-empty and square");
    }
    if (!W.allFinite()) {
      throw NetworkError("adjacency matrix has non-finite entries");
    }
    for (Index j = 0; j < W.rows(); ++j) {
      for (Index i = 0; i < W.cols(); ++i) {
        if (W(j, i) < 0.0) {
          throw NetworkError("negative weight w[" + std::to_string(j) + "][" + std::to_string(i) +
                             "]");
        }
      }
      const double s = W.row(j).sum();
      if (std::abs(s - 1.0) > kRowSumTolerance) {
        throw NetworkError("row " + std::to_string(j) + " sums to " + std::to_string(s) +
                           ", expected 1");
      }
    }
    return InfluenceNetwork(std::move(W));
  }

  static InfluenceNetwork homogeneous(Index n) {
    if (n < 1) throw NetworkError("homogeneous network needs n >= 1");
    return InfluenceNetwork(Matrix::Constant(n, n, 1.0 / static_cast<double>(n)));
  }

  /// Uniform(0,1) weights, optional zero diagonal, each row normalized.
  static InfluenceNetwork random(Index n, std::uint64_t seed, bool zero_diagonal = false) {
    if (n < 1) throw NetworkError("random network needs n >= 1");
    if (zero_diagonal && n < 2) throw NetworkError("zero-diagonal network needs n >= 2");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix W(n, n);
    for (Index j = 0; j < n; ++j) {
      double s = 0.0;
      do {
        s = 0.0;
        for (Index i = 0; i < n; ++i) {
          W(j, i) = (zero_diagonal && i == j) ? 0.0 : unif(gen);
          s += W(j, i);
        }
      } while (s <= 0.0);
      W.row(j) /= s;
    }
    return InfluenceNetwork(std::move(W));
  }

  /// Every agent follows a single leader (all rows equal e_leader').
  static InfluenceNetwork leader(Index n, Index leader_index = 0) {
    if (n < 1 || leader_index < 0 || leader_index >= n) {
      throw NetworkError("leader index out of range");
    }
    Matrix W = Matrix::Zero(n, n);
    W.col(leader_index).setOnes();
    return InfluenceNetwork(std::move(W));
  }

  Index n() const { return W_.rows(); }
  const Matrix& W() const { return W_; }
  double operator()(Index j, Index i) const { return W_(j, i); }

  bool is_homogeneous(double tol = 1e-12) const {
    const double w = 1.0 / static_cast<double>(n());
    return (W_.array() - w).abs().maxCoeff() <= tol;
  }

 private:
  explicit InfluenceNetwork(Matrix W) : W_(std::move(W)) {}

  Matrix W_;
};

}  // namespace infgame
