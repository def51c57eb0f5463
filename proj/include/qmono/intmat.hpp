#pragma once

// Small dense integer matrices with overflow-checked arithmetic,
// Smith and Hermite normal forms, and integer kernels.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmono/errors.hpp"

namespace qmono {

namespace detail {
inline long long checked(__int128 v) {
  if (v > INT64_MAX || v < INT64_MIN) throw Error(ErrorCode::CapExceeded, "integer matrix entry overflow");
  return static_cast<long long>(v);
}
}  // namespace detail

class IntMat {
 public:
  IntMat() = default;
  IntMat(int rows, int cols) : r_(rows), c_(cols), a_(static_cast<std::size_t>(rows * cols), 0) {}
  IntMat(std::initializer_list<std::initializer_list<long long>> rows) {
    r_ = static_cast<int>(rows.size());
    c_ = r_ ? static_cast<int>(rows.begin()->size()) : 0;
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != c_) throw Error(ErrorCode::InvalidAction, "ragged matrix");
      for (auto v : row) a_.push_back(v);
    }
  }
  static IntMat identity(int n) {
    IntMat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }
  static IntMat from_columns(const std::vector<std::vector<long long>>& cols, int rows) {
    IntMat m(rows, static_cast<int>(cols.size()));
    for (int j = 0; j < m.c_; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    return m;
  }

  int rows() const { return r_; }
  int cols() const { return c_; }
  long long& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * c_ + j)]; }
  long long operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * c_ + j)]; }
  std::vector<long long> column(int j) const {
    std::vector<long long> v(static_cast<std::size_t>(r_));
    for (int i = 0; i < r_; ++i) v[static_cast<std::size_t>(i)] = (*this)(i, j);
    return v;
  }

  bool operator==(const IntMat& o) const { return r_ == o.r_ && c_ == o.c_ && a_ == o.a_; }
  bool operator!=(const IntMat& o) const { return !(*this == o); }
  bool operator<(const IntMat& o) const {
    if (r_ != o.r_) return r_ < o.r_;
    if (c_ != o.c_) return c_ < o.c_;
    return a_ < o.a_;
  }

  IntMat operator*(const IntMat& o) const {
    if (c_ != o.r_) throw Error(ErrorCode::InvalidAction, "matrix shape mismatch");
    IntMat m(r_, o.c_);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < o.c_; ++j) {
        __int128 s = 0;
        for (int k = 0; k < c_; ++k) s += static_cast<__int128>((*this)(i, k)) * o(k, j);
        m(i, j) = detail::checked(s);
      }
    return m;
  }
  std::vector<long long> operator*(const std::vector<long long>& v) const {
    std::vector<long long> out(static_cast<std::size_t>(r_));
    for (int i = 0; i < r_; ++i) {
      __int128 s = 0;
      for (int k = 0; k < c_; ++k) s += static_cast<__int128>((*this)(i, k)) * v[static_cast<std::size_t>(k)];
      out[static_cast<std::size_t>(i)] = detail::checked(s);
    }
    return out;
  }
  IntMat operator-() const {
    IntMat m = *this;
    for (auto& v : m.a_) v = -v;
    return m;
  }
  IntMat transpose() const {
    IntMat m(c_, r_);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) m(j, i) = (*this)(i, j);
    return m;
  }
  long long trace() const {
    long long s = 0;
    for (int i = 0; i < std::min(r_, c_); ++i) s += (*this)(i, i);
    return s;
  }
  bool is_identity() const { return *this == identity(r_); }
  IntMat pow(int e) const {
    IntMat r = identity(r_), b = *this;
    if (e < 0) {
      b = inverse();
      e = -e;
    }
    while (e) {
      if (e & 1) r = r * b;
      e >>= 1;
      if (e) b = b * b;
    }
    return r;
  }

  long long det() const {
    if (r_ != c_) throw Error(ErrorCode::InvalidAction, "determinant of non-square matrix");
    const int n = r_;
    if (n == 0) return 1;
    std::vector<__int128> m(a_.begin(), a_.end());
    auto at = [&](int i, int j) -> __int128& { return m[static_cast<std::size_t>(i * n + j)]; };
    __int128 prev = 1;
    int sign = 1;
    for (int k = 0; k < n; ++k) {
      int piv = -1;
      for (int i = k; i < n; ++i)
        if (at(i, k) != 0) {
          piv = i;
          break;
        }
      if (piv < 0) return 0;
      if (piv != k) {
        for (int j = 0; j < n; ++j) std::swap(at(piv, j), at(k, j));
        sign = -sign;
      }
      for (int i = k + 1; i < n; ++i)
        for (int j = k + 1; j < n; ++j) at(i, j) = (at(k, k) * at(i, j) - at(i, k) * at(k, j)) / prev;
      prev = at(k, k);
    }
    return detail::checked(sign * prev);
  }
  bool is_unimodular() const { return r_ == c_ && (det() == 1 || det() == -1); }

  // inverse of a unimodular matrix
  IntMat inverse() const {
    if (!is_unimodular()) throw Error(ErrorCode::NotUnimodular, "matrix is not unimodular");
    const int n = r_;
    // adjugate times det, since det is +-1
    IntMat inv(n, n);
    const long long d = det();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        IntMat minor(n - 1, n - 1);
        for (int r = 0, rr = 0; r < n; ++r) {
          if (r == j) continue;
          for (int c = 0, cc = 0; c < n; ++c) {
            if (c == i) continue;
            minor(rr, cc++) = (*this)(r, c);
          }
          ++rr;
        }
        long long cof = ((i + j) % 2 ? -1 : 1) * (n == 1 ? 1 : minor.det());
        inv(i, j) = cof * d;
      }
    return inv;
  }

  long long max_abs() const {
    long long m = 0;
    for (auto v : a_) m = std::max(m, v < 0 ? -v : v);
    return m;
  }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < r_; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = 0; j < c_; ++j) row.push_back((*this)(i, j));
      rows.push_back(row);
    }
    return rows;
  }
  static IntMat from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw Error(ErrorCode::InvalidAction, "matrix must be a non-empty array of rows");
    IntMat m(static_cast<int>(j.size()), static_cast<int>(j[0].size()));
    for (int i = 0; i < m.r_; ++i) {
      if (!j[static_cast<std::size_t>(i)].is_array() || static_cast<int>(j[static_cast<std::size_t>(i)].size()) != m.c_)
        throw Error(ErrorCode::InvalidAction, "ragged matrix");
      for (int c = 0; c < m.c_; ++c) m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<long long>();
    }
    return m;
  }
  std::string to_string() const { return to_json().dump(); }

 private:
  int r_ = 0, c_ = 0;
  std::vector<long long> a_;
};

struct SmithForm {
  IntMat U, D, V;  // U * A * V = D
  int rank = 0;
};

// Smith normal form with unimodular transforms.
inline SmithForm smith_normal_form(const IntMat& A) {
  const int m = A.rows(), n = A.cols();
  IntMat D = A, U = IntMat::identity(m), V = IntMat::identity(n);
  auto row_op = [&](IntMat& M, int target, int src, long long k) {  // row_target -= k * row_src
    for (int j = 0; j < M.cols(); ++j) M(target, j) = detail::checked(static_cast<__int128>(M(target, j)) - static_cast<__int128>(k) * M(src, j));
  };
  auto col_op = [&](IntMat& M, int target, int src, long long k) {
    for (int i = 0; i < M.rows(); ++i) M(i, target) = detail::checked(static_cast<__int128>(M(i, target)) - static_cast<__int128>(k) * M(i, src));
  };
  auto swap_rows = [](IntMat& M, int a, int b) {
    for (int j = 0; j < M.cols(); ++j) std::swap(M(a, j), M(b, j));
  };
  auto swap_cols = [](IntMat& M, int a, int b) {
    for (int i = 0; i < M.rows(); ++i) std::swap(M(i, a), M(i, b));
  };
  auto fdiv = [](long long a, long long b) {
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
  };
  int t = 0;
  for (; t < std::min(m, n); ++t) {
    // pivot: smallest nonzero |entry| in the remaining block
    while (true) {
      int pi = -1, pj = -1;
      long long best = 0;
      for (int i = t; i < m; ++i)
        for (int j = t; j < n; ++j) {
          long long v = D(i, j) < 0 ? -D(i, j) : D(i, j);
          if (v != 0 && (best == 0 || v < best)) {
            best = v;
            pi = i;
            pj = j;
          }
        }
      if (pi < 0) goto done;
      swap_rows(D, t, pi);
      swap_rows(U, t, pi);
      swap_cols(D, t, pj);
      swap_cols(V, t, pj);
      bool clean = true;
      for (int i = t + 1; i < m; ++i) {
        long long q = fdiv(D(i, t), D(t, t));
        if (q) {
          row_op(D, i, t, q);
          row_op(U, i, t, q);
        }
        if (D(i, t) != 0) clean = false;
      }
      for (int j = t + 1; j < n; ++j) {
        long long q = fdiv(D(t, j), D(t, t));
        if (q) {
          col_op(D, j, t, q);
          col_op(V, j, t, q);
        }
        if (D(t, j) != 0) clean = false;
      }
      if (!clean) continue;
      // divisibility: pivot must divide every remaining entry
      int bad_i = -1;
      for (int i = t + 1; i < m && bad_i < 0; ++i)
        for (int j = t + 1; j < n; ++j)
          if (D(i, j) % D(t, t) != 0) {
            bad_i = i;
            break;
          }
      if (bad_i < 0) break;
      row_op(D, t, bad_i, -1);
      row_op(U, t, bad_i, -1);
    }
    if (D(t, t) < 0) {
      for (int j = 0; j < n; ++j) D(t, j) = -D(t, j);
      for (int j = 0; j < m; ++j) U(t, j) = -U(t, j);
    }
  }
done:
  SmithForm sf{U, D, V, 0};
  for (int i = 0; i < std::min(m, n); ++i)
    if (D(i, i) != 0) sf.rank = i + 1;
  return sf;
}

// Basis (as columns) of the integer kernel {v : A v = 0}.
inline IntMat integer_kernel(const IntMat& A) {
  SmithForm sf = smith_normal_form(A);
  const int n = A.cols();
  std::vector<std::vector<long long>> cols;
  for (int j = sf.rank; j < n; ++j) cols.push_back(sf.V.column(j));
  return IntMat::from_columns(cols, n);
}

// Column-style lower-triangular Hermite form of a full-rank square basis.
inline IntMat hermite_columns(IntMat B) {
  const int n = B.rows();
  const int k = B.cols();
  auto col_comb = [&](int a, int b, long long p, long long q, long long r, long long s) {
    // (col_a, col_b) <- (p col_a + q col_b, r col_a + s col_b)
    for (int i = 0; i < n; ++i) {
      __int128 x = B(i, a), y = B(i, b);
      B(i, a) = detail::checked(p * x + q * y);
      B(i, b) = detail::checked(r * x + s * y);
    }
  };
  int col = 0;
  for (int row = 0; row < n && col < k; ++row) {
    for (int j = col + 1; j < k; ++j) {
      if (B(row, j) == 0) continue;
      long long a = B(row, col), b = B(row, j);
      // extended gcd
      long long old_r = a, r = b, old_s = 1, s = 0, old_t = 0, tt = 1;
      while (r != 0) {
        long long q = old_r / r;
        long long tmp = old_r - q * r;
        old_r = r;
        r = tmp;
        tmp = old_s - q * s;
        old_s = s;
        s = tmp;
        tmp = old_t - q * tt;
        old_t = tt;
        tt = tmp;
      }
      long long g = old_r;
      col_comb(col, j, old_s, old_t, -b / g, a / g);
    }
    if (B(row, col) == 0) continue;
    if (B(row, col) < 0)
      for (int i = 0; i < n; ++i) B(i, col) = -B(i, col);
    for (int j = 0; j < col; ++j) {
      long long d = B(row, col);
      long long q = B(row, j) / d;
      if (B(row, j) - q * d < 0) --q;
      if (q)
        for (int i = 0; i < n; ++i) B(i, j) = detail::checked(static_cast<__int128>(B(i, j)) - static_cast<__int128>(q) * B(i, col));
    }
    ++col;
  }
  // drop zero columns
  std::vector<std::vector<long long>> cols;
  for (int j = 0; j < k; ++j) {
    auto c = B.column(j);
    if (std::any_of(c.begin(), c.end(), [](long long v) { return v != 0; })) cols.push_back(c);
  }
  return IntMat::from_columns(cols, n);
}

// Saturation of the lattice spanned by the columns of B: (Q-span) cap Z^n.
inline IntMat saturate(const IntMat& B) {
  const int n = B.rows();
  IntMat perp = integer_kernel(B.transpose());  // columns orthogonal to span
  if (perp.cols() == 0) return IntMat::identity(n);
  return hermite_columns(integer_kernel(perp.transpose()));
}

}  // namespace qmono
