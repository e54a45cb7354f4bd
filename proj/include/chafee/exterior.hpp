#pragma once

// Wedge-space linear algebra on R^N at test scale.
//
// Grade-k blades e_i = e_{i_1} ^ ... ^ e_{i_k} (i_1 < ... < i_k, 1-based) are
// ordered lexicographically; WedgeVector stores one coefficient per blade.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "chafee/spectral.hpp"

namespace chafee {

using WedgeIndex = std::vector<int>;

/// C(n, k); 0 when k < 0 or k > n.
long binomial(int n, int k);

/// Lexicographic rank of a strictly increasing 1-based index set within
/// C(n, k).
long rank_combination(std::span<const int> index, int n);

/// Inverse of rank_combination.
WedgeIndex unrank_combination(long rank, int n, int k);

/// i0 = (1, ..., k).
WedgeIndex leading_index(int k);

class WedgeVector {
 public:
  WedgeVector(int n, int k);
  WedgeVector(int n, int k, std::vector<double> coeffs);

  int dimension() const { return n_; }
  int grade() const { return k_; }
  std::span<const double> coeffs() const { return coeffs_; }
  std::span<double> coeffs() { return coeffs_; }
  double coeff(std::span<const int> index) const;
  double& coeff(std::span<const int> index);
  double norm() const;

 private:
  int n_;
  int k_;
  std::vector<double> coeffs_;
};

/// Unit blade e_i.
WedgeVector unit_blade(int n, std::span<const int> index);

/// v_1 ^ ... ^ v_k: the coefficient at i is the minor of the N x k matrix of
/// columns v_j restricted to rows i.
WedgeVector blade(const Eigen::MatrixXd& columns);
WedgeVector blade(const std::vector<SpectralField>& vectors);

/// <v_1^...^v_k, w_1^...^w_k> = det[(v_i, w_j)].
double wedge_inner(const WedgeVector& a, const WedgeVector& b);

/// Gram determinant det[(v_i, v_j)] = |v_1 ^ ... ^ v_k|^2.
double gram_determinant(const Eigen::MatrixXd& columns);

/// Coefficient of v_1^...^v_k at i0 = (1..k): the leading k x k minor.
double leading_minor(const Eigen::MatrixXd& columns);

/// Singular values in decreasing order (one-sided Jacobi, so small values
/// keep their relative accuracy).
std::vector<double> singular_values(const Eigen::MatrixXd& a);

/// |^k A| = product of the k largest singular values.
double wedge_norm_of_operator(const Eigen::MatrixXd& a, int k);

/// ^k A in the blade basis: entry (I, J) is det A[I, J].
Eigen::MatrixXd compound_matrix(const Eigen::MatrixXd& a, int k);

/// Induced derivation B^(k)(v_1^...^v_k) = sum_j v_1^...^B v_j^...^v_k.
Eigen::MatrixXd b_hat_k(const Eigen::MatrixXd& b, int k);

}  // namespace chafee
