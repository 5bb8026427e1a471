// SPDX-License-Identifier: Apache-2.0
//
// Tape-based reverse-mode automatic differentiation over 64-bit scalars.
//
// A Tape is an append-only arena of nodes in topological order: every node's
// operands precede it. backward() runs one reverse sweep and returns numeric
// adjoints. backward_as_vars() records the reverse sweep itself as new tape
// nodes, so expressions built from the returned gradients can be
// differentiated again; nesting this gives exact higher-order (mixed)
// derivatives with a single mechanism.

#ifndef NARXID_CORE_AUTODIFF_HPP
#define NARXID_CORE_AUTODIFF_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "core/common.hpp"

namespace narxid::ad {

enum class OpKind : std::uint8_t {
  kConst,  // leaf
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kTanh,
  kExp,
  kSquare,
};

class Tape;

// Lightweight handle: a node index on a specific tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t index) : tape_(tape), index_(index) {}

  double value() const;
  Tape* tape() const { return tape_; }
  std::uint32_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t index_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf node holding a constant/input value. Rejects non-finite input.
  Var lift(double x);

  Var binary(OpKind kind, Var a, Var b);
  Var unary(OpKind kind, Var a);

  std::size_t size() const { return op_.size(); }
  void clear();
  void reserve(std::size_t n);

  double value(std::uint32_t index) const { return val_[index]; }

  // Recomputes all node values from the leaves; a freshly replayed tape
  // reproduces the stored values bit-exactly.
  std::vector<double> replay() const;

  // One numeric reverse sweep from `output`; returns d output / d seed for
  // every seed. Seeds that do not reach the output get gradient 0.
  std::vector<double> backward(Var output, std::span<const Var> seeds) const;

  // Records the reverse sweep as tape nodes and returns the gradients as
  // Vars, so a second backward() differentiates through them.
  std::vector<Var> backward_as_vars(Var output, std::span<const Var> seeds);

 private:
  Var push(OpKind kind, std::uint32_t a, std::uint32_t b, double value, double pa, double pb);
  void check_same_tape(Var a, Var b) const;

  std::vector<OpKind> op_;
  std::vector<std::uint32_t> lhs_;
  std::vector<std::uint32_t> rhs_;
  std::vector<double> val_;
  // Local partials w.r.t. lhs/rhs, fixed at record time.
  std::vector<double> pa_;
  std::vector<double> pb_;
};

inline double Var::value() const { return tape_->value(index_); }

// Arithmetic sugar. Mixing Vars from different tapes throws UsageError.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);

Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, double b);

Var tanh(Var a);
Var exp(Var a);
Var square(Var a);

}  // namespace narxid::ad

#endif  // NARXID_CORE_AUTODIFF_HPP
