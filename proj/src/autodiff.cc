#include "lidartraj/autodiff.h"

#include <cmath>
#include <limits>
#include <string>

#include "lidartraj/errors.h"

namespace lidartraj {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Tape* CommonTape(Var a, Var b) {
  if (!a.valid() || !b.valid()) throw ArgumentError("operation on an empty Var");
  if (a.tape() != b.tape()) throw ArgumentError("operands recorded on different tapes");
  return a.tape();
}

Tape* TapeOf(Var a) {
  if (!a.valid()) throw ArgumentError("operation on an empty Var");
  return a.tape();
}

Tape* TapeOf(std::span<const Var> xs) {
  if (xs.empty()) throw ArgumentError("operation on an empty list of Vars");
  Tape* t = TapeOf(xs[0]);
  for (const Var& v : xs) {
    if (v.tape() != t) throw ArgumentError("operands recorded on different tapes");
  }
  return t;
}

Var Unary(Op op, Var x, double value, double partial) {
  const std::array<Var, 1> in{x};
  const std::array<double, 1> d{partial};
  return TapeOf(x)->Record(op, in, d, value);
}

Var Binary(Op op, Var a, Var b, double value, double da, double db) {
  const std::array<Var, 2> in{a, b};
  const std::array<double, 2> d{da, db};
  return CommonTape(a, b)->Record(op, in, d, value);
}

}  // namespace

const char* OpName(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kConstant: return "constant";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kNeg: return "neg";
    case Op::kAffine: return "affine";
    case Op::kMatVec3: return "matvec3";
    case Op::kMatMul3: return "matmul3";
    case Op::kDot: return "dot";
    case Op::kSum: return "sum";
    case Op::kSigmoid: return "sigmoid";
    case Op::kTanh: return "tanh";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSqrt: return "sqrt";
    case Op::kPow: return "pow";
    case Op::kAbs: return "abs";
    case Op::kClampPass: return "clamp_pass";
    case Op::kMin: return "min";
    case Op::kMax: return "max";
  }
  return "?";
}

double Var::value() const { return tape_->value(*this); }

std::vector<double> Gradients::Of(std::span<const Var> vars) const {
  std::vector<double> out;
  out.reserve(vars.size());
  for (const Var& v : vars) out.push_back(adjoint_.at(v.index()));
  return out;
}

Var Tape::Leaf(double value) { return Record(Op::kLeaf, {}, {}, value); }

Var Tape::Constant(double value) { return Record(Op::kConstant, {}, {}, value); }

Var Tape::Record(Op op, std::span<const Var> inputs, std::span<const double> partials,
                 double value) {
  if (inputs.size() != partials.size()) {
    throw ArgumentError("Record: inputs and partials differ in length");
  }
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(Node{value, static_cast<std::uint32_t>(edge_parent_.size()),
                        static_cast<std::uint32_t>(inputs.size()), op, false});
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].tape_ != this) throw ArgumentError("Record: input from another tape");
    edge_parent_.push_back(inputs[i].id_);
    edge_partial_.push_back(partials[i]);
  }
  return Var(this, id);
}

Var Tape::RecordError(Op op, std::span<const Var> inputs, const char* reason) {
  std::vector<double> zeros(inputs.size(), 0.0);
  Var v = Record(op, inputs, zeros, kNaN);
  nodes_.back().error = true;
  error_reasons_.emplace_back(std::string(OpName(op)) + ": " + reason + " (node " +
                              std::to_string(v.id_) + ")");
  return v;
}

void Tape::MarkKink() { ++kinks_; }

void Tape::SetGroup(const std::string& name, std::vector<Var> vars) {
  groups_[name] = std::move(vars);
}

const std::vector<Var>& Tape::Group(const std::string& name) const {
  auto it = groups_.find(name);
  if (it == groups_.end()) throw ArgumentError("no parameter group named '" + name + "'");
  return it->second;
}

Gradients Tape::Backward(Var loss) const {
  if (loss.tape_ != this) throw ArgumentError("backward: loss is not a node of this tape");
  std::vector<double> adj(nodes_.size(), 0.0);
  std::vector<char> reached(nodes_.size(), 0);
  adj[loss.id_] = 1.0;
  reached[loss.id_] = 1;
  for (std::int64_t i = loss.id_; i >= 0; --i) {
    if (!reached[i]) continue;
    const Node& node = nodes_[i];
    if (node.error) {
      std::string why = "backward reached an undefined node " + std::to_string(i);
      for (const auto& r : error_reasons_) {
        if (r.find("(node " + std::to_string(i) + ")") != std::string::npos) why = r;
      }
      throw NumericError(why);
    }
    const double a = adj[i];
    if (!std::isfinite(a)) {
      throw NumericError("non-finite adjoint at node " + std::to_string(i) + " (" +
                         OpName(node.op) + ")");
    }
    const std::uint32_t end = node.edge_begin + node.edge_count;
    for (std::uint32_t e = node.edge_begin; e < end; ++e) {
      const std::uint32_t p = edge_parent_[e];
      adj[p] += a * edge_partial_[e];
      reached[p] = 1;
    }
  }
  return Gradients(std::move(adj));
}

Gradients Tape::Backward(std::span<const Var> outputs) const {
  if (outputs.size() != 1) {
    throw ArgumentError("backward needs a scalar loss, got " + std::to_string(outputs.size()) +
                        " outputs");
  }
  return Backward(outputs[0]);
}

void Tape::Clear() {
  nodes_.clear();
  edge_parent_.clear();
  edge_partial_.clear();
  error_reasons_.clear();
  groups_.clear();
  kinks_ = 0;
}

Var operator+(Var a, Var b) { return Binary(Op::kAdd, a, b, a.value() + b.value(), 1.0, 1.0); }
Var operator+(Var a, double b) { return Unary(Op::kAdd, a, a.value() + b, 1.0); }
Var operator+(double a, Var b) { return b + a; }
Var operator-(Var a, Var b) { return Binary(Op::kSub, a, b, a.value() - b.value(), 1.0, -1.0); }
Var operator-(Var a, double b) { return Unary(Op::kSub, a, a.value() - b, 1.0); }
Var operator-(double a, Var b) { return Unary(Op::kSub, b, a - b.value(), -1.0); }
Var operator*(Var a, Var b) {
  return Binary(Op::kMul, a, b, a.value() * b.value(), b.value(), a.value());
}
Var operator*(Var a, double b) { return Unary(Op::kMul, a, a.value() * b, b); }
Var operator*(double a, Var b) { return b * a; }

Var operator/(Var a, Var b) {
  const double bv = b.value();
  if (bv == 0.0) {
    const std::array<Var, 2> in{a, b};
    return CommonTape(a, b)->RecordError(Op::kDiv, in, "division by zero");
  }
  return Binary(Op::kDiv, a, b, a.value() / bv, 1.0 / bv, -a.value() / (bv * bv));
}
Var operator/(Var a, double b) {
  if (b == 0.0) {
    const std::array<Var, 1> in{a};
    return TapeOf(a)->RecordError(Op::kDiv, in, "division by zero");
  }
  return Unary(Op::kDiv, a, a.value() / b, 1.0 / b);
}
Var operator/(double a, Var b) {
  const double bv = b.value();
  if (bv == 0.0) {
    const std::array<Var, 1> in{b};
    return TapeOf(b)->RecordError(Op::kDiv, in, "division by zero");
  }
  return Unary(Op::kDiv, b, a / bv, -a / (bv * bv));
}
Var operator-(Var a) { return Unary(Op::kNeg, a, -a.value(), -1.0); }

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var Sigmoid(Var x) {
  const double s = Sigmoid(x.value());
  return Unary(Op::kSigmoid, x, s, s * (1.0 - s));
}

Var Tanh(Var x) {
  const double t = std::tanh(x.value());
  return Unary(Op::kTanh, x, t, 1.0 - t * t);
}

Var Exp(Var x) {
  const double e = std::exp(x.value());
  return Unary(Op::kExp, x, e, e);
}

Var Log(Var x) {
  const double v = x.value();
  if (!(v > 0.0)) {
    const std::array<Var, 1> in{x};
    return TapeOf(x)->RecordError(Op::kLog, in, "log of non-positive value");
  }
  return Unary(Op::kLog, x, std::log(v), 1.0 / v);
}

Var Sqrt(Var x) {
  const double v = x.value();
  if (v < 0.0) {
    const std::array<Var, 1> in{x};
    return TapeOf(x)->RecordError(Op::kSqrt, in, "sqrt of negative value");
  }
  if (v == 0.0) {
    Var out = Unary(Op::kSqrt, x, 0.0, 0.0);
    TapeOf(x)->MarkKink();
    return out;
  }
  const double s = std::sqrt(v);
  return Unary(Op::kSqrt, x, s, 0.5 / s);
}

Var Pow(Var x, double exponent) {
  const double v = x.value();
  if (v < 0.0 && exponent != std::floor(exponent)) {
    const std::array<Var, 1> in{x};
    return TapeOf(x)->RecordError(Op::kPow, in, "non-integer power of negative value");
  }
  if (v == 0.0 && exponent < 1.0) {
    if (exponent < 0.0) {
      const std::array<Var, 1> in{x};
      return TapeOf(x)->RecordError(Op::kPow, in, "negative power of zero");
    }
    Var out = Unary(Op::kPow, x, exponent == 0.0 ? 1.0 : 0.0, 0.0);
    if (exponent > 0.0) TapeOf(x)->MarkKink();
    return out;
  }
  return Unary(Op::kPow, x, std::pow(v, exponent), exponent * std::pow(v, exponent - 1.0));
}

Var Abs(Var x) {
  const double v = x.value();
  if (v == 0.0) {
    Var out = Unary(Op::kAbs, x, 0.0, 0.0);
    TapeOf(x)->MarkKink();
    return out;
  }
  return Unary(Op::kAbs, x, std::abs(v), v > 0.0 ? 1.0 : -1.0);
}

Var ClampPass(Var x, double lo, double hi) {
  const double v = x.value();
  const double c = v < lo ? lo : (v > hi ? hi : v);
  Var out = Unary(Op::kClampPass, x, c, 1.0);
  if (c != v || v == lo || v == hi) TapeOf(x)->MarkKink();
  return out;
}

Var Min(Var a, Var b) {
  const double av = a.value(), bv = b.value();
  const bool first = av <= bv;
  Var out = Binary(Op::kMin, a, b, first ? av : bv, first ? 1.0 : 0.0, first ? 0.0 : 1.0);
  if (av == bv) a.tape()->MarkKink();
  return out;
}

Var Max(Var a, Var b) {
  const double av = a.value(), bv = b.value();
  const bool first = av >= bv;
  Var out = Binary(Op::kMax, a, b, first ? av : bv, first ? 1.0 : 0.0, first ? 0.0 : 1.0);
  if (av == bv) a.tape()->MarkKink();
  return out;
}

Var Sum(std::span<const Var> xs) {
  Tape* t = TapeOf(xs);
  double s = 0.0;
  for (const Var& v : xs) s += v.value();
  std::vector<double> ones(xs.size(), 1.0);
  return t->Record(Op::kSum, xs, ones, s);
}

Var Dot(std::span<const Var> a, std::span<const Var> b) {
  if (a.size() != b.size()) throw ArgumentError("dot: length mismatch");
  Tape* t = TapeOf(a);
  std::vector<Var> in;
  std::vector<double> d;
  in.reserve(2 * a.size());
  d.reserve(2 * a.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i].value() * b[i].value();
    in.push_back(a[i]);
    d.push_back(b[i].value());
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    in.push_back(b[i]);
    d.push_back(a[i].value());
  }
  TapeOf(b);
  return t->Record(Op::kDot, in, d, s);
}

Var Affine(std::span<const Var> xs, std::span<const double> coeffs, double offset) {
  if (xs.size() != coeffs.size()) throw ArgumentError("affine: length mismatch");
  Tape* t = TapeOf(xs);
  double s = offset;
  for (std::size_t i = 0; i < xs.size(); ++i) s += coeffs[i] * xs[i].value();
  return t->Record(Op::kAffine, xs, coeffs, s);
}

std::array<Var, 3> MatVec3(const std::array<Var, 9>& m, const std::array<Var, 3>& v) {
  Tape* t = TapeOf(std::span<const Var>(m));
  std::array<Var, 3> out;
  for (int r = 0; r < 3; ++r) {
    const std::array<Var, 6> in{m[3 * r], m[3 * r + 1], m[3 * r + 2], v[0], v[1], v[2]};
    const std::array<double, 6> d{v[0].value(), v[1].value(), v[2].value(),
                                  m[3 * r].value(), m[3 * r + 1].value(), m[3 * r + 2].value()};
    const double val = d[0] * d[3] + d[1] * d[4] + d[2] * d[5];
    out[r] = t->Record(Op::kMatVec3, in, d, val);
  }
  return out;
}

std::array<Var, 9> MatMul3(const std::array<Var, 9>& a, const std::array<Var, 9>& b) {
  Tape* t = TapeOf(std::span<const Var>(a));
  std::array<Var, 9> out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const std::array<Var, 6> in{a[3 * r], a[3 * r + 1], a[3 * r + 2],
                                  b[c], b[3 + c], b[6 + c]};
      const std::array<double, 6> d{b[c].value(), b[3 + c].value(), b[6 + c].value(),
                                    a[3 * r].value(), a[3 * r + 1].value(),
                                    a[3 * r + 2].value()};
      const double val = d[0] * d[3] + d[1] * d[4] + d[2] * d[5];
      out[3 * r + c] = t->Record(Op::kMatMul3, in, d, val);
    }
  }
  return out;
}

GradCheckResult GradCheck(const DifferentiableFn& f, std::span<const double> x, double h,
                          std::span<const int> coords) {
  if (!(h > 0.0)) throw ArgumentError("grad_check step must be positive");
  std::vector<double> analytic;
  const double f0 = f(x, &analytic);
  if (!std::isfinite(f0)) throw NumericError("grad_check: f(x) is not finite");
  if (analytic.size() != x.size()) {
    throw ArgumentError("grad_check: analytic gradient has the wrong length");
  }
  std::vector<int> all;
  if (coords.empty()) {
    for (int i = 0; i < static_cast<int>(x.size()); ++i) all.push_back(i);
    coords = all;
  }
  // Round-off in f(x +- h) limits what a central difference can resolve.
  const double resolution =
      64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f0)) / h;

  GradCheckResult result;
  std::vector<double> xp(x.begin(), x.end());
  for (int i : coords) {
    if (i < 0 || i >= static_cast<int>(x.size())) {
      throw ArgumentError("grad_check: coordinate out of range");
    }
    const double xi = xp[i];
    xp[i] = xi + h;
    const double fp = f(xp, nullptr);
    xp[i] = xi - h;
    const double fm = f(xp, nullptr);
    xp[i] = xi;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("grad_check: non-finite evaluation at coordinate " + std::to_string(i));
    }
    const double fwd = (fp - f0) / h;
    const double bwd = (f0 - fm) / h;
    const double central = (fp - fm) / (2.0 * h);
    const double scale = std::max({std::abs(fwd), std::abs(bwd), resolution});
    if (std::abs(fwd - bwd) > 0.1 * scale + 4.0 * resolution) {
      result.kinks.push_back(i);
      continue;
    }
    if (std::abs(central) < resolution && std::abs(analytic[i]) < resolution) {
      result.unresolved.push_back(i);
      continue;
    }
    const double rel = std::abs(analytic[i] - central) / (std::abs(central) + 1e-12);
    result.checked.push_back(i);
    result.rel_errors.push_back(rel);
    result.max_rel_error = std::max(result.max_rel_error, rel);
  }
  return result;
}

}  // namespace lidartraj
