#include <cmath>

#include <doctest.h>

#include "lidartraj/autodiff.h"
#include "lidartraj/errors.h"
#include "test_util.h"

namespace lidartraj {
namespace {

using testing::Gen;

// Central difference of a plain scalar function, as an independent oracle.
template <class F>
double CentralDiff(F f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

TEST_CASE("elementary backward values") {
  Tape tape;
  const Var x = tape.Leaf(3.0);
  CHECK(tape.Backward(x * x)[x] == 6.0);

  std::vector<Var> leaves;
  for (int i = 0; i < 5; ++i) leaves.push_back(tape.Leaf(i));
  const Gradients g = tape.Backward(Sum(leaves));
  for (const Var& v : leaves) CHECK(g[v] == 1.0);

  const Var c = tape.Constant(4.0);
  const Gradients gc = tape.Backward(c);
  CHECK(gc[x] == 0.0);
}

TEST_CASE("composite sigmoid(3x + 1) matches a central difference") {
  Tape tape;
  const Var x = tape.Leaf(0.2);
  const Var y = Sigmoid(3.0 * x + 1.0);
  const double analytic = tape.Backward(y)[x];
  const double fd = CentralDiff([](double v) { return 1.0 / (1.0 + std::exp(-(3 * v + 1))); }, 0.2);
  CHECK(std::abs(analytic - fd) / std::abs(fd) < 1e-6);
}

TEST_CASE("every unary primitive agrees with finite differences") {
  struct Case {
    const char* name;
    Var (*var_fn)(Var);
    double (*num_fn)(double);
    double at;
  };
  const Case cases[] = {
      {"tanh", [](Var v) { return Tanh(v); }, [](double v) { return std::tanh(v); }, 0.4},
      {"exp", [](Var v) { return Exp(v); }, [](double v) { return std::exp(v); }, -0.7},
      {"log", [](Var v) { return Log(v); }, [](double v) { return std::log(v); }, 2.5},
      {"sqrt", [](Var v) { return Sqrt(v); }, [](double v) { return std::sqrt(v); }, 1.7},
      {"pow", [](Var v) { return Pow(v, 2.5); }, [](double v) { return std::pow(v, 2.5); }, 1.3},
      {"abs", [](Var v) { return Abs(v); }, [](double v) { return std::abs(v); }, -0.9},
      {"div", [](Var v) { return 2.0 / v; }, [](double v) { return 2.0 / v; }, 0.8},
      {"neg", [](Var v) { return -v; }, [](double v) { return -v; }, 0.8},
  };
  for (const Case& c : cases) {
    CAPTURE(c.name);
    Tape tape;
    const Var x = tape.Leaf(c.at);
    const Var y = c.var_fn(x);
    CHECK(y.value() == doctest::Approx(c.num_fn(c.at)).epsilon(1e-14));
    const double fd = CentralDiff(c.num_fn, c.at);
    CHECK(std::abs(tape.Backward(y)[x] - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("binary, dot, affine and matrix primitives") {
  Gen g(31);
  Tape tape;
  const Var a = tape.Leaf(1.5), b = tape.Leaf(-0.5);
  const Gradients gd = tape.Backward(a / b);
  CHECK(gd[a] == doctest::Approx(1.0 / -0.5));
  CHECK(gd[b] == doctest::Approx(-1.5 / 0.25));

  std::array<Var, 3> u, v;
  for (int i = 0; i < 3; ++i) u[i] = tape.Leaf(g.Uniform(-1, 1)), v[i] = tape.Leaf(g.Uniform(-1, 1));
  const Gradients gdot = tape.Backward(Dot(u, v));
  for (int i = 0; i < 3; ++i) {
    CHECK(gdot[u[i]] == v[i].value());
    CHECK(gdot[v[i]] == u[i].value());
  }

  const std::array<double, 3> c = {2.0, -1.0, 0.5};
  const Var aff = Affine(u, c, 4.0);
  CHECK(aff.value() ==
        doctest::Approx(4.0 + 2 * u[0].value() - u[1].value() + 0.5 * u[2].value()));
  const Gradients ga = tape.Backward(aff);
  for (int i = 0; i < 3; ++i) CHECK(ga[u[i]] == c[i]);

  std::array<Var, 9> m, n;
  Eigen::Matrix3d M, Nm;
  for (int i = 0; i < 9; ++i) {
    M(i / 3, i % 3) = g.Uniform(-1, 1);
    Nm(i / 3, i % 3) = g.Uniform(-1, 1);
    m[i] = tape.Leaf(M(i / 3, i % 3));
    n[i] = tape.Leaf(Nm(i / 3, i % 3));
  }
  const Eigen::Vector3d vv(v[0].value(), v[1].value(), v[2].value());
  const auto mv = MatVec3(m, v);
  for (int r = 0; r < 3; ++r) CHECK(mv[r].value() == doctest::Approx((M * vv)[r]));
  const auto mm = MatMul3(m, n);
  const Eigen::Matrix3d MN = M * Nm;
  for (int i = 0; i < 9; ++i) CHECK(mm[i].value() == doctest::Approx(MN(i / 3, i % 3)));
  // d(MN)_{01} / dM_{0k} = N_{k1}.
  const Gradients gm = tape.Backward(mm[1]);
  for (int k = 0; k < 3; ++k) CHECK(gm[m[k]] == Nm(k, 1));
}

TEST_CASE("min, max and clamp subgradients") {
  Tape tape;
  const Var a = tape.Leaf(1.0), b = tape.Leaf(2.0);
  CHECK(tape.Backward(Min(a, b))[a] == 1.0);
  CHECK(tape.Backward(Max(a, b))[b] == 1.0);
  const std::size_t before = tape.kink_count();
  const Var c = tape.Leaf(1.0);
  const Gradients tie = tape.Backward(Max(a, c));
  CHECK(tie[a] == 1.0);  // ties go to the first argument
  CHECK(tie[c] == 0.0);
  CHECK(tape.kink_count() == before + 1);

  const Var x = tape.Leaf(5.0);
  const Var clamped = ClampPass(x, -1.0, 1.0);
  CHECK(clamped.value() == 1.0);
  CHECK(tape.Backward(clamped)[x] == 1.0);  // straight through

  const Var z = tape.Leaf(0.0);
  CHECK(tape.Backward(Abs(z))[z] == 0.0);
  CHECK(tape.Backward(Sqrt(z))[z] == 0.0);
}

TEST_CASE("undefined operations raise NumericError on backward") {
  Tape tape;
  const Var x = tape.Leaf(0.0);
  const Var y = tape.Leaf(1.0) / x;
  CHECK(std::isnan(y.value()));
  CHECK_THROWS_AS(tape.Backward(y), NumericError);
  CHECK_THROWS_AS(tape.Backward(Log(x)), NumericError);
  CHECK_THROWS_AS(tape.Backward(Log(tape.Leaf(-1.0))), NumericError);
  CHECK_THROWS_AS(tape.Backward(Sqrt(tape.Leaf(-1.0))), NumericError);
  // An error node not on the loss path is harmless.
  const Var ok = tape.Leaf(2.0);
  CHECK(tape.Backward(ok * 3.0)[ok] == 3.0);
}

TEST_CASE("backward argument checks") {
  Tape t1, t2;
  const Var a = t1.Leaf(1.0), b = t1.Leaf(2.0);
  CHECK_THROWS_AS(t2.Backward(a), ArgumentError);
  const std::array<Var, 2> two{a, b};
  CHECK_THROWS_AS(t1.Backward(std::span<const Var>(two)), ArgumentError);
  CHECK_THROWS_AS(t1.Backward(Var()), ArgumentError);
}

TEST_CASE("property: linearity and zero-locality of backward") {
  Gen g(32);
  for (int trial = 0; trial < 30; ++trial) {
    Tape tape;
    std::vector<Var> x;
    for (int i = 0; i < 6; ++i) x.push_back(tape.Leaf(g.Uniform(0.5, 2.0)));
    const Var unused = tape.Leaf(1.0);
    const Var f = Sigmoid(x[0] * x[1]) + Log(x[2]) * x[3];
    const Var h = Exp(x[4] * 0.3) - Sqrt(x[5]) * x[0];
    const double a = g.Uniform(-2, 2), b = g.Uniform(-2, 2);
    const Var combo = a * f + b * h;
    const Gradients gf = tape.Backward(f), gh = tape.Backward(h), gc = tape.Backward(combo);
    for (const Var& v : x) {
      CHECK(gc[v] == doctest::Approx(a * gf[v] + b * gh[v]).epsilon(1e-12));
    }
    CHECK(gc[unused] == 0.0);
    // Determinism: same tape, same gradients bit for bit.
    const Gradients again = tape.Backward(combo);
    for (const Var& v : x) CHECK(again[v] == gc[v]);
  }
}

TEST_CASE("grad_check on a quadratic form and at a clamp kink") {
  Gen g(33);
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 9; ++i) A(i / 3, i % 3) = g.Uniform(-1, 1);
  A = A * A.transpose();
  auto quad = [&](std::span<const double> xs, std::vector<double>* grad) {
    Tape tape;
    std::array<Var, 3> v;
    for (int i = 0; i < 3; ++i) v[i] = tape.Leaf(xs[i]);
    std::vector<Var> terms;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) terms.push_back(v[i] * v[j] * A(i, j));
    }
    const Var f = Sum(terms);
    if (grad) *grad = tape.Backward(f).Of(v);
    return f.value();
  };
  const std::vector<double> x = {0.3, -1.1, 0.8};
  const GradCheckResult r = GradCheck(quad, x, 1e-4);
  CHECK(r.max_rel_error < 1e-8);
  CHECK(r.checked.size() == 3);

  // |x0| + x1^2 at x0 = 0: coordinate 0 sits on the kink.
  auto kinked = [](std::span<const double> xs, std::vector<double>* grad) {
    Tape tape;
    const Var a = tape.Leaf(xs[0]), b = tape.Leaf(xs[1]);
    const Var f = Abs(a) + b * b;
    if (grad) *grad = tape.Backward(f).Of(std::array<Var, 2>{a, b});
    return f.value();
  };
  const std::vector<double> y = {0.0, 0.7};
  const GradCheckResult rk = GradCheck(kinked, y, 1e-5);
  REQUIRE(rk.kinks.size() == 1);
  CHECK(rk.kinks[0] == 0);
  CHECK(rk.max_rel_error < 1e-8);

  auto bad = [](std::span<const double> xs, std::vector<double>* grad) {
    if (grad) grad->assign(xs.size(), 0.0);
    return xs[0] > 0.5 ? NAN : xs[0];
  };
  const std::vector<double> z = {0.5};
  CHECK_THROWS_AS(GradCheck(bad, z, 1e-3), NumericError);
}

}  // namespace
}  // namespace lidartraj
