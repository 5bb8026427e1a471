// SPDX-License-Identifier: Apache-2.0
#include "core/autodiff.hpp"

#include <cmath>
#include <limits>

namespace narxid::ad {

namespace {
constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
// Divisors below this magnitude are treated as zero. The model class never
// divides; this only guards plumbing code.
constexpr double kDivFloor = 1e-300;
}  // namespace

Var Tape::push(OpKind kind, std::uint32_t a, std::uint32_t b, double value, double pa,
               double pb) {
  if (op_.size() >= static_cast<std::size_t>(kNone))
    throw NumericError("tape overflow: too many nodes");
  const auto idx = static_cast<std::uint32_t>(op_.size());
  op_.push_back(kind);
  lhs_.push_back(a);
  rhs_.push_back(b);
  val_.push_back(value);
  pa_.push_back(pa);
  pb_.push_back(pb);
  return Var(this, idx);
}

Var Tape::lift(double x) {
  if (!std::isfinite(x)) throw UsageError("lift: non-finite input");
  return push(OpKind::kConst, kNone, kNone, x, 0.0, 0.0);
}

void Tape::check_same_tape(Var a, Var b) const {
  if (a.tape() != this || b.tape() != this)
    throw UsageError("cannot combine Vars from different tapes");
}

Var Tape::binary(OpKind kind, Var a, Var b) {
  check_same_tape(a, b);
  const double x = val_[a.index()];
  const double y = val_[b.index()];
  switch (kind) {
    case OpKind::kAdd:
      return push(kind, a.index(), b.index(), x + y, 1.0, 1.0);
    case OpKind::kSub:
      return push(kind, a.index(), b.index(), x - y, 1.0, -1.0);
    case OpKind::kMul:
      return push(kind, a.index(), b.index(), x * y, y, x);
    case OpKind::kDiv: {
      if (std::fabs(y) < kDivFloor) throw NumericError("division by (near-)zero");
      const double q = x / y;
      return push(kind, a.index(), b.index(), q, 1.0 / y, -q / y);
    }
    default:
      throw UsageError("binary: not a binary op");
  }
}

Var Tape::unary(OpKind kind, Var a) {
  if (a.tape() != this) throw UsageError("cannot combine Vars from different tapes");
  const double x = val_[a.index()];
  switch (kind) {
    case OpKind::kNeg:
      return push(kind, a.index(), kNone, -x, -1.0, 0.0);
    case OpKind::kTanh: {
      const double t = std::tanh(x);
      return push(kind, a.index(), kNone, t, 1.0 - t * t, 0.0);
    }
    case OpKind::kExp: {
      const double e = std::exp(x);
      return push(kind, a.index(), kNone, e, e, 0.0);
    }
    case OpKind::kSquare:
      return push(kind, a.index(), kNone, x * x, 2.0 * x, 0.0);
    default:
      throw UsageError("unary: not a unary op");
  }
}

void Tape::clear() {
  op_.clear();
  lhs_.clear();
  rhs_.clear();
  val_.clear();
  pa_.clear();
  pb_.clear();
}

void Tape::reserve(std::size_t n) {
  op_.reserve(n);
  lhs_.reserve(n);
  rhs_.reserve(n);
  val_.reserve(n);
  pa_.reserve(n);
  pb_.reserve(n);
}

std::vector<double> Tape::replay() const {
  std::vector<double> out(op_.size());
  for (std::size_t i = 0; i < op_.size(); ++i) {
    const double x = (lhs_[i] == kNone) ? 0.0 : out[lhs_[i]];
    const double y = (rhs_[i] == kNone) ? 0.0 : out[rhs_[i]];
    switch (op_[i]) {
      case OpKind::kConst:
        out[i] = val_[i];
        break;
      case OpKind::kAdd:
        out[i] = x + y;
        break;
      case OpKind::kSub:
        out[i] = x - y;
        break;
      case OpKind::kMul:
        out[i] = x * y;
        break;
      case OpKind::kDiv:
        out[i] = x / y;
        break;
      case OpKind::kNeg:
        out[i] = -x;
        break;
      case OpKind::kTanh:
        out[i] = std::tanh(x);
        break;
      case OpKind::kExp:
        out[i] = std::exp(x);
        break;
      case OpKind::kSquare:
        out[i] = x * x;
        break;
    }
  }
  return out;
}

std::vector<double> Tape::backward(Var output, std::span<const Var> seeds) const {
  if (output.tape() != this) throw UsageError("backward: output from another tape");
  std::vector<double> adj(op_.size(), 0.0);
  adj[output.index()] = 1.0;
  for (std::uint32_t i = output.index() + 1; i-- > 0;) {
    const double a = adj[i];
    if (a == 0.0 || op_[i] == OpKind::kConst) continue;
    adj[lhs_[i]] += a * pa_[i];
    if (rhs_[i] != kNone) adj[rhs_[i]] += a * pb_[i];
  }
  std::vector<double> out;
  out.reserve(seeds.size());
  for (const Var& s : seeds) {
    if (s.tape() != this) throw UsageError("backward: seed from another tape");
    out.push_back(adj[s.index()]);
  }
  return out;
}

std::vector<Var> Tape::backward_as_vars(Var output, std::span<const Var> seeds) {
  if (output.tape() != this) throw UsageError("backward_as_vars: output from another tape");
  const std::uint32_t top = output.index();
  // adj[i] = node index of the accumulated adjoint of node i, kNone if empty.
  std::vector<std::uint32_t> adj(top + 1, kNone);
  const Var one = lift(1.0);
  const Var two = lift(2.0);
  adj[top] = one.index();

  auto accumulate = [&](std::uint32_t target, Var contribution) {
    if (adj[target] == kNone) {
      adj[target] = contribution.index();
    } else {
      adj[target] = binary(OpKind::kAdd, Var(this, adj[target]), contribution).index();
    }
  };

  for (std::uint32_t i = top + 1; i-- > 0;) {
    if (adj[i] == kNone || op_[i] == OpKind::kConst) continue;
    const Var a(this, adj[i]);
    const Var x(this, lhs_[i]);
    switch (op_[i]) {
      case OpKind::kAdd:
        accumulate(lhs_[i], a);
        accumulate(rhs_[i], a);
        break;
      case OpKind::kSub:
        accumulate(lhs_[i], a);
        accumulate(rhs_[i], unary(OpKind::kNeg, a));
        break;
      case OpKind::kMul: {
        const Var y(this, rhs_[i]);
        accumulate(lhs_[i], binary(OpKind::kMul, a, y));
        accumulate(rhs_[i], binary(OpKind::kMul, a, x));
        break;
      }
      case OpKind::kDiv: {
        const Var y(this, rhs_[i]);
        const Var self(this, i);
        accumulate(lhs_[i], binary(OpKind::kDiv, a, y));
        // d(x/y)/dy = -(x/y)/y
        accumulate(rhs_[i],
                   unary(OpKind::kNeg, binary(OpKind::kMul, a, binary(OpKind::kDiv, self, y))));
        break;
      }
      case OpKind::kNeg:
        accumulate(lhs_[i], unary(OpKind::kNeg, a));
        break;
      case OpKind::kTanh: {
        const Var self(this, i);
        const Var dtanh = binary(OpKind::kSub, one, unary(OpKind::kSquare, self));
        accumulate(lhs_[i], binary(OpKind::kMul, a, dtanh));
        break;
      }
      case OpKind::kExp: {
        const Var self(this, i);
        accumulate(lhs_[i], binary(OpKind::kMul, a, self));
        break;
      }
      case OpKind::kSquare:
        accumulate(lhs_[i], binary(OpKind::kMul, a, binary(OpKind::kMul, two, x)));
        break;
      case OpKind::kConst:
        break;
    }
  }

  std::vector<Var> out;
  out.reserve(seeds.size());
  for (const Var& s : seeds) {
    if (s.tape() != this) throw UsageError("backward_as_vars: seed from another tape");
    if (s.index() <= top && adj[s.index()] != kNone) {
      out.emplace_back(this, adj[s.index()]);
    } else {
      out.push_back(lift(0.0));
    }
  }
  return out;
}

Var operator+(Var a, Var b) { return a.tape()->binary(OpKind::kAdd, a, b); }
Var operator-(Var a, Var b) { return a.tape()->binary(OpKind::kSub, a, b); }
Var operator*(Var a, Var b) { return a.tape()->binary(OpKind::kMul, a, b); }
Var operator/(Var a, Var b) { return a.tape()->binary(OpKind::kDiv, a, b); }
Var operator-(Var a) { return a.tape()->unary(OpKind::kNeg, a); }

Var operator+(Var a, double b) { return a + a.tape()->lift(b); }
Var operator+(double a, Var b) { return b.tape()->lift(a) + b; }
Var operator-(Var a, double b) { return a - a.tape()->lift(b); }
Var operator-(double a, Var b) { return b.tape()->lift(a) - b; }
Var operator*(Var a, double b) { return a * a.tape()->lift(b); }
Var operator*(double a, Var b) { return b.tape()->lift(a) * b; }
Var operator/(Var a, double b) { return a / a.tape()->lift(b); }

Var tanh(Var a) { return a.tape()->unary(OpKind::kTanh, a); }
Var exp(Var a) { return a.tape()->unary(OpKind::kExp, a); }
Var square(Var a) { return a.tape()->unary(OpKind::kSquare, a); }

}  // namespace narxid::ad
