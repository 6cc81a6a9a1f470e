#ifndef LIDARTRAJ_AUTODIFF_H_
#define LIDARTRAJ_AUTODIFF_H_

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace lidartraj {

class Tape;

enum class Op : std::uint8_t {
  kLeaf,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kAffine,
  kMatVec3,
  kMatMul3,
  kDot,
  kSum,
  kSigmoid,
  kTanh,
  kExp,
  kLog,
  kSqrt,
  kPow,
  kAbs,
  kClampPass,
  kMin,
  kMax,
};

const char* OpName(Op op);

// Handle to a scalar node on a Tape. Cheap to copy; only valid while the tape
// it came from is alive and not cleared.
class Var {
 public:
  Var() = default;

  double value() const;
  bool valid() const { return tape_ != nullptr; }
  std::uint32_t index() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

// Adjoints of every node for one loss.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(std::vector<double> adjoint) : adjoint_(std::move(adjoint)) {}

  double operator[](Var v) const { return adjoint_.at(v.index()); }
  std::vector<double> Of(std::span<const Var> vars) const;

 private:
  std::vector<double> adjoint_;
};

// Append-only record of scalar operations. Nodes are stored in creation order,
// which is a topological order since every input must already exist.
//
// A tape is not thread-safe; use one tape per thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Leaf(double value);
  Var Constant(double value);

  // Generic node: value plus d(value)/d(input_i) for each input.
  Var Record(Op op, std::span<const Var> inputs, std::span<const double> partials,
             double value);
  // Node whose value is undefined (division by zero, log of non-positive, ...).
  // Backward through it raises NumericError.
  Var RecordError(Op op, std::span<const Var> inputs, const char* reason);
  // Marks the most recent node as evaluated at a non-differentiable point
  // (a subgradient was chosen).
  void MarkKink();

  double value(Var v) const { return nodes_[v.id_].value; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t kink_count() const { return kinks_; }
  Op op(Var v) const { return nodes_[v.id_].op; }

  // Named parameter groups for GradientSet extraction.
  void SetGroup(const std::string& name, std::vector<Var> vars);
  const std::vector<Var>& Group(const std::string& name) const;
  bool HasGroup(const std::string& name) const { return groups_.count(name) > 0; }

  // Reverse accumulation from a single scalar node. Leaves that are not on a
  // path to `loss` get exactly zero. Throws ArgumentError for a foreign or
  // empty handle and NumericError if an undefined node or a non-finite
  // adjoint is reached.
  Gradients Backward(Var loss) const;
  // Same, but rejects anything other than exactly one output.
  Gradients Backward(std::span<const Var> outputs) const;

  void Clear();

 private:
  struct Node {
    double value;
    std::uint32_t edge_begin;
    std::uint32_t edge_count;
    Op op;
    bool error;
  };

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> edge_parent_;
  std::vector<double> edge_partial_;
  std::vector<std::string> error_reasons_;
  std::map<std::string, std::vector<Var>> groups_;
  std::size_t kinks_ = 0;
};

// Arithmetic. Mixed Var/double forms fold the constant into the partials.
Var operator+(Var a, Var b);
Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, Var b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);
Var operator-(Var a);

Var Sigmoid(Var x);
Var Tanh(Var x);
Var Exp(Var x);
Var Log(Var x);
Var Sqrt(Var x);
Var Pow(Var x, double exponent);
Var Abs(Var x);
// Forward value clamped to [lo, hi]; gradient passes straight through.
Var ClampPass(Var x, double lo, double hi);
// Subgradient goes to the selected branch; ties select the first argument.
Var Min(Var a, Var b);
Var Max(Var a, Var b);

Var Sum(std::span<const Var> xs);
Var Dot(std::span<const Var> a, std::span<const Var> b);
// sum_i coeffs[i] * xs[i] + offset, as a single node.
Var Affine(std::span<const Var> xs, std::span<const double> coeffs, double offset);
// Row-major 3x3 matrix times 3-vector.
std::array<Var, 3> MatVec3(const std::array<Var, 9>& m, const std::array<Var, 3>& v);
std::array<Var, 9> MatMul3(const std::array<Var, 9>& a, const std::array<Var, 9>& b);

// Double overloads so numeric code can be written once for both scalar types.
double Sigmoid(double x);
inline double Abs(double x) { return x < 0.0 ? -x : x; }
inline double ValueOf(double x) { return x; }
inline double ValueOf(Var x) { return x.value(); }

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::vector<int> checked;
  std::vector<double> rel_errors;  // parallel to `checked`
  // Coordinates where forward and backward differences disagree (a kink lies
  // inside [x - h, x + h]).
  std::vector<int> kinks;
  // Coordinates whose central difference is below the floating-point
  // resolution of f, so no meaningful comparison is possible.
  std::vector<int> unresolved;
};

// f(x, grad) returns f(x) and, when grad is non-null, writes the analytic
// gradient. Compares it against central differences with step h on
// `coords` (all coordinates when empty). Relative error per coordinate is
// |analytic - central| / (|central| + 1e-12). Throws NumericError if any
// evaluation is non-finite.
using DifferentiableFn = std::function<double(std::span<const double>, std::vector<double>*)>;
GradCheckResult GradCheck(const DifferentiableFn& f, std::span<const double> x, double h,
                          std::span<const int> coords = {});

}  // namespace lidartraj

#endif  // LIDARTRAJ_AUTODIFF_H_
