#pragma once

// Minimal tape-based reverse-mode automatic differentiation.
//
// A Var is a double plus a node index on a Tape. Constants carry no tape and
// never receive adjoints. Nodes store their parents and the local partial
// derivatives; backward() sweeps the tape once in reverse.

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace vessel::ad {

class Tape {
 public:
  Tape() { begin_.push_back(0); }

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Appends a node with the given parents and partials, returns its index.
  int push(std::span<const int> parents, std::span<const double> partials) {
    for (std::size_t i = 0; i < parents.size(); ++i) {
      parents_.push_back(parents[i]);
      partials_.push_back(partials[i]);
    }
    begin_.push_back(static_cast<std::uint32_t>(parents_.size()));
    return static_cast<int>(begin_.size()) - 2;
  }

  int push_leaf() { return push({}, {}); }

  std::size_t size() const { return begin_.size() - 1; }

  /// Adjoints of every node for the given output seeds.
  std::vector<double> backward(std::span<const std::pair<int, double>> seeds) const {
    std::vector<double> adj(size(), 0.0);
    for (const auto& [id, w] : seeds) adj[static_cast<std::size_t>(id)] += w;
    for (std::size_t n = size(); n-- > 0;) {
      const double a = adj[n];
      if (a == 0.0) continue;
      for (std::uint32_t e = begin_[n]; e < begin_[n + 1]; ++e) {
        adj[static_cast<std::size_t>(parents_[e])] += a * partials_[e];
      }
    }
    return adj;
  }

  std::vector<double> backward(int output) const {
    const std::pair<int, double> seed{output, 1.0};
    return backward(std::span<const std::pair<int, double>>(&seed, 1));
  }

 private:
  std::vector<std::uint32_t> begin_;
  std::vector<int> parents_;
  std::vector<double> partials_;
};

class Var {
 public:
  Var() = default;
  Var(double v) : v_(v) {}  // NOLINT: implicit constants are intended
  Var(double v, int id, Tape* tape) : v_(v), id_(id), tape_(tape) {}

  static Var leaf(double v, Tape& tape) { return Var(v, tape.push_leaf(), &tape); }

  double value() const { return v_; }
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool is_constant() const { return id_ < 0; }

  Var& operator+=(const Var& o);
  Var& operator-=(const Var& o);
  Var& operator*=(const Var& o);
  Var& operator/=(const Var& o);

 private:
  double v_ = 0.0;
  int id_ = -1;
  Tape* tape_ = nullptr;
};

inline double value(double x) { return x; }
inline double value(const Var& x) { return x.value(); }

namespace detail {

inline Var unary(double v, const Var& a, double da) {
  if (a.is_constant()) return Var(v);
  const int p = a.id();
  return Var(v, a.tape()->push(std::span<const int>(&p, 1), std::span<const double>(&da, 1)), a.tape());
}

inline Var binary(double v, const Var& a, double da, const Var& b, double db) {
  int ps[2];
  double ws[2];
  std::size_t n = 0;
  Tape* tape = nullptr;
  if (!a.is_constant()) {
    ps[n] = a.id();
    ws[n++] = da;
    tape = a.tape();
  }
  if (!b.is_constant()) {
    ps[n] = b.id();
    ws[n++] = db;
    tape = b.tape();
  }
  if (tape == nullptr) return Var(v);
  return Var(v, tape->push(std::span<const int>(ps, n), std::span<const double>(ws, n)), tape);
}

}  // namespace detail

/// Node with many inputs, for externally differentiated blocks.
inline Var custom(double v, std::span<const Var> inputs, std::span<const double> partials) {
  std::vector<int> ps;
  std::vector<double> ws;
  Tape* tape = nullptr;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].is_constant() || partials[i] == 0.0) continue;
    ps.push_back(inputs[i].id());
    ws.push_back(partials[i]);
    tape = inputs[i].tape();
  }
  if (tape == nullptr) return Var(v);
  return Var(v, tape->push(ps, ws), tape);
}

inline Var operator+(const Var& a, const Var& b) { return detail::binary(a.value() + b.value(), a, 1.0, b, 1.0); }
inline Var operator-(const Var& a, const Var& b) { return detail::binary(a.value() - b.value(), a, 1.0, b, -1.0); }
inline Var operator*(const Var& a, const Var& b) {
  return detail::binary(a.value() * b.value(), a, b.value(), b, a.value());
}
inline Var operator/(const Var& a, const Var& b) {
  const double q = a.value() / b.value();
  return detail::binary(q, a, 1.0 / b.value(), b, -q / b.value());
}
inline Var operator-(const Var& a) { return detail::unary(-a.value(), a, -1.0); }

inline Var operator+(const Var& a, double b) { return detail::unary(a.value() + b, a, 1.0); }
inline Var operator+(double a, const Var& b) { return detail::unary(a + b.value(), b, 1.0); }
inline Var operator-(const Var& a, double b) { return detail::unary(a.value() - b, a, 1.0); }
inline Var operator-(double a, const Var& b) { return detail::unary(a - b.value(), b, -1.0); }
inline Var operator*(const Var& a, double b) { return detail::unary(a.value() * b, a, b); }
inline Var operator*(double a, const Var& b) { return detail::unary(a * b.value(), b, a); }
inline Var operator/(const Var& a, double b) { return detail::unary(a.value() / b, a, 1.0 / b); }

inline Var& Var::operator+=(const Var& o) { return *this = *this + o; }
inline Var& Var::operator-=(const Var& o) { return *this = *this - o; }
inline Var& Var::operator*=(const Var& o) { return *this = *this * o; }
inline Var& Var::operator/=(const Var& o) { return *this = *this / o; }

inline bool operator<(const Var& a, const Var& b) { return a.value() < b.value(); }
inline bool operator>(const Var& a, const Var& b) { return a.value() > b.value(); }

inline Var sqrt(const Var& a) {
  const double s = std::sqrt(a.value());
  return detail::unary(s, a, 0.5 / s);
}
inline Var sin(const Var& a) { return detail::unary(std::sin(a.value()), a, std::cos(a.value())); }
inline Var cos(const Var& a) { return detail::unary(std::cos(a.value()), a, -std::sin(a.value())); }
inline Var exp(const Var& a) {
  const double e = std::exp(a.value());
  return detail::unary(e, a, e);
}

}  // namespace vessel::ad
