#include "chafee/exterior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace chafee {

long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

namespace {

void check_index(std::span<const int> index, int n) {
  for (std::size_t j = 0; j < index.size(); ++j) {
    if (index[j] < 1 || index[j] > n || (j > 0 && index[j] <= index[j - 1])) {
      throw std::invalid_argument("wedge index must be strictly increasing within 1..N");
    }
  }
}

}  // namespace

long rank_combination(std::span<const int> index, int n) {
  check_index(index, n);
  const int k = static_cast<int>(index.size());
  long r = 0;
  int prev = 0;
  for (int j = 0; j < k; ++j) {
    // count the sets that agree on the first j entries and have a smaller
    // entry in position j
    for (int v = prev + 1; v < index[j]; ++v) r += binomial(n - v, k - j - 1);
    prev = index[j];
  }
  return r;
}

WedgeIndex unrank_combination(long rank, int n, int k) {
  if (rank < 0 || rank >= binomial(n, k)) throw std::out_of_range("combination rank out of range");
  WedgeIndex idx(static_cast<std::size_t>(k));
  int v = 1;
  for (int j = 0; j < k; ++j) {
    for (;; ++v) {
      const long c = binomial(n - v, k - j - 1);
      if (rank < c) break;
      rank -= c;
    }
    idx[j] = v++;
  }
  return idx;
}

WedgeIndex leading_index(int k) {
  WedgeIndex idx(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) idx[j] = j + 1;
  return idx;
}

WedgeVector::WedgeVector(int n, int k) : n_(n), k_(k) {
  if (n < 1 || k < 1 || k > n) throw std::invalid_argument("wedge grade must satisfy 1 <= k <= N");
  coeffs_.assign(static_cast<std::size_t>(binomial(n, k)), 0.0);
}

WedgeVector::WedgeVector(int n, int k, std::vector<double> coeffs) : WedgeVector(n, k) {
  if (coeffs.size() != coeffs_.size()) throw std::invalid_argument("wedge coefficient count mismatch");
  coeffs_ = std::move(coeffs);
}

double WedgeVector::coeff(std::span<const int> index) const {
  if (static_cast<int>(index.size()) != k_) throw std::invalid_argument("wedge grade mismatch");
  return coeffs_[static_cast<std::size_t>(rank_combination(index, n_))];
}

double& WedgeVector::coeff(std::span<const int> index) {
  if (static_cast<int>(index.size()) != k_) throw std::invalid_argument("wedge grade mismatch");
  return coeffs_[static_cast<std::size_t>(rank_combination(index, n_))];
}

double WedgeVector::norm() const {
  double s = 0.0;
  for (double c : coeffs_) s += c * c;
  return std::sqrt(s);
}

WedgeVector unit_blade(int n, std::span<const int> index) {
  WedgeVector w(n, static_cast<int>(index.size()));
  w.coeff(index) = 1.0;
  return w;
}

namespace {

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& a, const WedgeIndex& rows, const WedgeIndex& cols) {
  const int k = static_cast<int>(rows.size());
  Eigen::MatrixXd s(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) s(i, j) = a(rows[i] - 1, cols[j] - 1);
  }
  return s;
}

}  // namespace

WedgeVector blade(const Eigen::MatrixXd& columns) {
  const int n = static_cast<int>(columns.rows());
  const int k = static_cast<int>(columns.cols());
  WedgeVector w(n, k);
  const long m = binomial(n, k);
  WedgeIndex all = leading_index(k);
  for (long r = 0; r < m; ++r) {
    const WedgeIndex rows = unrank_combination(r, n, k);
    w.coeffs()[static_cast<std::size_t>(r)] = submatrix(columns, rows, all).determinant();
  }
  return w;
}

WedgeVector blade(const std::vector<SpectralField>& vectors) {
  if (vectors.empty()) throw std::invalid_argument("blade of an empty list");
  const int n = vectors.front().modes();
  Eigen::MatrixXd m(n, static_cast<int>(vectors.size()));
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    if (vectors[j].modes() != n) throw std::invalid_argument("blade: size mismatch");
    for (int i = 0; i < n; ++i) m(i, static_cast<int>(j)) = vectors[j].coeffs()[i];
  }
  return blade(m);
}

double wedge_inner(const WedgeVector& a, const WedgeVector& b) {
  if (a.dimension() != b.dimension() || a.grade() != b.grade()) {
    throw std::invalid_argument("wedge_inner: grade or dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.coeffs().size(); ++i) s += a.coeffs()[i] * b.coeffs()[i];
  return s;
}

double gram_determinant(const Eigen::MatrixXd& columns) {
  return (columns.transpose() * columns).determinant();
}

double leading_minor(const Eigen::MatrixXd& columns) {
  const int k = static_cast<int>(columns.cols());
  return columns.topRows(k).determinant();
}

std::vector<double> singular_values(const Eigen::MatrixXd& a) {
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
  return {sv.data(), sv.data() + sv.size()};
}

double wedge_norm_of_operator(const Eigen::MatrixXd& a, int k) {
  const auto s = singular_values(a);
  if (k < 1 || k > static_cast<int>(s.size())) throw std::invalid_argument("wedge grade out of range");
  double p = 1.0;
  for (int i = 0; i < k; ++i) p *= s[i];
  return p;
}

Eigen::MatrixXd compound_matrix(const Eigen::MatrixXd& a, int k) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n) throw std::invalid_argument("compound_matrix needs a square matrix");
  const long m = binomial(n, k);
  Eigen::MatrixXd c(m, m);
  std::vector<WedgeIndex> idx;
  idx.reserve(static_cast<std::size_t>(m));
  for (long r = 0; r < m; ++r) idx.push_back(unrank_combination(r, n, k));
  for (long i = 0; i < m; ++i) {
    for (long j = 0; j < m; ++j) c(i, j) = submatrix(a, idx[i], idx[j]).determinant();
  }
  return c;
}

Eigen::MatrixXd b_hat_k(const Eigen::MatrixXd& b, int k) {
  const int n = static_cast<int>(b.rows());
  if (b.cols() != n) throw std::invalid_argument("b_hat_k needs a square matrix");
  const long m = binomial(n, k);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  for (long col = 0; col < m; ++col) {
    const WedgeIndex src = unrank_combination(col, n, k);
    for (int j = 0; j < k; ++j) {
      // replace e_{src[j]} by B e_{src[j]} = sum_r B(r, src[j]) e_r
      for (int r = 1; r <= n; ++r) {
        const double v = b(r - 1, src[j] - 1);
        if (v == 0.0) continue;
        WedgeIndex dst = src;
        dst[j] = r;
        // skip if r repeats another entry (the blade vanishes)
        bool repeated = false;
        for (int q = 0; q < k; ++q) repeated |= (q != j && src[q] == r);
        if (repeated) continue;
        // sort by adjacent swaps, tracking the sign
        int sign = 1;
        for (int a = j; a + 1 < k && dst[a] > dst[a + 1]; ++a) {
          std::swap(dst[a], dst[a + 1]);
          sign = -sign;
        }
        for (int a = j; a > 0 && dst[a] < dst[a - 1]; --a) {
          std::swap(dst[a], dst[a - 1]);
          sign = -sign;
        }
        out(rank_combination(dst, n), col) += sign * v;
      }
    }
  }
  return out;
}

}  // namespace chafee
