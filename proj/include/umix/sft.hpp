#pragma once
// Subshifts of finite type: admissible words, cylinders, symbolic metrics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "umix/error.hpp"

namespace umix {

using Word = std::vector<int>;
using IntMatrix = std::vector<std::vector<int>>;

/// One-sided subshift given by a 0/1 transition matrix and the d_theta parameter.
class Subshift {
 public:
  Subshift() = default;

  Subshift(IntMatrix transition, double theta) : t_(std::move(transition)), theta_(theta) {
    n_ = static_cast<int>(t_.size());
    if (n_ < 1) throw Error(Errc::NonSquareMatrix, "empty transition matrix");
    for (const auto& row : t_) {
      if (static_cast<int>(row.size()) != n_)
        throw Error(Errc::NonSquareMatrix, "transition matrix is not square");
      for (int v : row)
        if (v != 0 && v != 1) throw Error(Errc::NonSquareMatrix, "entries must be 0 or 1");
    }
    if (!(theta > 0.0 && theta < 1.0))
      throw Error(Errc::ThetaOutOfRange, "theta must lie in (0,1)");
    for (int i = 0; i < n_; ++i) {
      bool row = false, col = false;
      for (int j = 0; j < n_; ++j) {
        row = row || t_[i][j] == 1;
        col = col || t_[j][i] == 1;
      }
      if (!row || !col) throw Error(Errc::DeadSymbol, "symbol " + std::to_string(i) + " is dead");
    }
  }

  int size() const { return n_; }
  double theta() const { return theta_; }
  const IntMatrix& transition() const { return t_; }
  bool allowed(int a, int b) const { return t_[a][b] == 1; }

  bool admissible(const Word& w) const {
    for (int s : w)
      if (s < 0 || s >= n_) return false;
    for (size_t i = 0; i + 1 < w.size(); ++i)
      if (!allowed(w[i], w[i + 1])) return false;
    return true;
  }

  int successor_count(int a) const {
    int c = 0;
    for (int b = 0; b < n_; ++b) c += t_[a][b];
    return c;
  }

  /// Smallest symbol that may follow a.
  int omega_next(int a) const {
    for (int b = 0; b < n_; ++b)
      if (allowed(a, b)) return b;
    return -1;
  }

  /// First len symbols of the lexicographically smallest admissible continuation after a.
  Word continuation(int a, int len) const {
    Word out;
    out.reserve(len);
    int cur = a;
    for (int i = 0; i < len; ++i) {
      cur = omega_next(cur);
      out.push_back(cur);
    }
    return out;
  }

  /// First len symbols of the representative point of the cylinder [w]: the periodic
  /// extension when it is admissible, otherwise w followed by its smallest continuation.
  Word rep_point(const Word& w, int len) const {
    Word out;
    out.reserve(len);
    if (w.empty()) return out;
    bool periodic = allowed(w.back(), w.front());
    for (int i = 0; i < len && i < static_cast<int>(w.size()); ++i) out.push_back(w[i]);
    if (static_cast<int>(out.size()) == len) return out;
    if (periodic) {
      for (int i = static_cast<int>(w.size()); i < len; ++i) out.push_back(w[i % w.size()]);
    } else {
      Word tail = continuation(w.back(), len - static_cast<int>(w.size()));
      out.insert(out.end(), tail.begin(), tail.end());
    }
    return out;
  }

  /// Number of forced successor steps after a word ending in a.
  int forced_steps(int a) const {
    int cur = a, count = 0;
    while (count < 64 && successor_count(cur) == 1) {
      cur = omega_next(cur);
      ++count;
    }
    return count;
  }

  /// d_theta-diameter of the cylinder [w] inside the one-sided shift space.
  double diameter(const int* w, int len) const {
    if (len == 0) return 1.0;
    return std::pow(theta_, len + forced_steps(w[len - 1]));
  }
  double diameter(const Word& w) const { return diameter(w.data(), static_cast<int>(w.size())); }

 private:
  int n_ = 0;
  IntMatrix t_;
  double theta_ = 0.5;
};

inline Subshift build_subshift(int n, const IntMatrix& transition, double theta) {
  if (n < 1 || static_cast<int>(transition.size()) != n)
    throw Error(Errc::NonSquareMatrix, "alphabet size does not match the matrix");
  return Subshift(transition, theta);
}

inline Subshift full_shift(int n, double theta) {
  return Subshift(IntMatrix(n, std::vector<int>(n, 1)), theta);
}

inline Subshift golden_mean(double theta) { return Subshift({{1, 1}, {1, 0}}, theta); }

/// Smallest N_T <= max_power with T^N_T entrywise positive.
inline std::optional<int> check_mixing(const Subshift& s, int max_power) {
  const int n = s.size();
  IntMatrix p = s.transition();
  for (int k = 1; k <= max_power; ++k) {
    bool pos = true;
    for (int i = 0; i < n && pos; ++i)
      for (int j = 0; j < n; ++j)
        if (p[i][j] == 0) {
          pos = false;
          break;
        }
    if (pos) return k;
    IntMatrix q(n, std::vector<int>(n, 0));
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < n; ++l)
        if (p[i][l])
          for (int j = 0; j < n; ++j)
            if (s.allowed(l, j)) q[i][j] = 1;
    p = std::move(q);
  }
  return std::nullopt;
}

inline int first_disagreement(const int* x, const int* y, int len) {
  for (int i = 0; i < len; ++i)
    if (x[i] != y[i]) return i;
  return len;
}

inline double d_theta(const Word& x, const Word& y, double theta) {
  if (x.size() != y.size()) throw Error(Errc::LengthMismatch, "d_theta on words of unequal length");
  int k = first_disagreement(x.data(), y.data(), static_cast<int>(x.size()));
  if (k == static_cast<int>(x.size())) return 0.0;
  return std::pow(theta, k);
}

/// Cylinder metric D: diameter of the smallest common cylinder, 1 across first symbols.
inline double metric_D(const Word& u, const Word& v, const Subshift& s) {
  if (u.size() != v.size()) throw Error(Errc::LengthMismatch, "metric_D on words of unequal length");
  if (u.empty()) return 1.0;
  if (u[0] != v[0]) return 1.0;
  int k = first_disagreement(u.data(), v.data(), static_cast<int>(u.size()));
  return s.diameter(u.data(), k);
}

/// All admissible words of a fixed length in lexicographic order.
class Cylinders {
 public:
  Cylinders() = default;

  Cylinders(const Subshift& s, int depth) : s_(s), depth_(depth) {
    if (depth < 1) throw Error(Errc::DepthZero, "cylinder depth must be at least 1");
    double bits = depth * std::log2(static_cast<double>(std::max(2, s.size())));
    if (bits > 62.0) throw Error(Errc::DimensionMismatch, "cylinder depth too large to index");
    Word w(depth);
    enumerate(w, 0);
  }

  const Subshift& shift() const { return s_; }
  int depth() const { return depth_; }
  size_t size() const { return codes_.size(); }
  const int* word(size_t i) const { return flat_.data() + i * depth_; }
  Word word_vec(size_t i) const { return Word(word(i), word(i) + depth_); }

  std::uint64_t code(const int* w) const {
    std::uint64_t c = 0;
    for (int i = 0; i < depth_; ++i) c = c * static_cast<std::uint64_t>(s_.size()) + w[i];
    return c;
  }

  /// Index of an admissible length-depth word, or -1.
  long find(const int* w) const {
    auto c = code(w);
    auto it = std::lower_bound(codes_.begin(), codes_.end(), c);
    if (it == codes_.end() || *it != c) return -1;
    return static_cast<long>(it - codes_.begin());
  }

  size_t index(const int* w) const {
    long i = find(w);
    if (i < 0) throw Error(Errc::InadmissibleWord, "word is not an admissible cylinder");
    return static_cast<size_t>(i);
  }
  size_t index(const Word& w) const {
    if (static_cast<int>(w.size()) != depth_) throw Error(Errc::LengthMismatch, "word length differs from depth");
    return index(w.data());
  }

  /// Index of the depth-K truncation of a longer word.
  size_t index_prefix(const int* w) const { return index(w); }

  /// Contiguous range [lo, hi) of cylinders extending the given prefix.
  std::pair<size_t, size_t> prefix_range(const int* p, int len) const {
    std::uint64_t lo = 0, hi = 0;
    std::uint64_t n = static_cast<std::uint64_t>(s_.size());
    for (int i = 0; i < depth_; ++i) {
      lo = lo * n + (i < len ? p[i] : 0);
      hi = hi * n + (i < len ? p[i] : n - 1);
    }
    auto a = std::lower_bound(codes_.begin(), codes_.end(), lo);
    auto b = std::upper_bound(codes_.begin(), codes_.end(), hi);
    return {static_cast<size_t>(a - codes_.begin()), static_cast<size_t>(b - codes_.begin())};
  }

  std::vector<Word> words() const {
    std::vector<Word> out;
    out.reserve(size());
    for (size_t i = 0; i < size(); ++i) out.push_back(word_vec(i));
    return out;
  }

 private:
  void enumerate(Word& w, int pos) {
    if (pos == depth_) {
      flat_.insert(flat_.end(), w.begin(), w.end());
      codes_.push_back(code(w.data()));
      return;
    }
    for (int a = 0; a < s_.size(); ++a) {
      if (pos > 0 && !s_.allowed(w[pos - 1], a)) continue;
      w[pos] = a;
      enumerate(w, pos + 1);
    }
  }

  Subshift s_;
  int depth_ = 0;
  std::vector<int> flat_;
  std::vector<std::uint64_t> codes_;
};

inline std::vector<Word> enumerate_cylinders(const Subshift& s, int depth) {
  return Cylinders(s, depth).words();
}

}  // namespace umix
