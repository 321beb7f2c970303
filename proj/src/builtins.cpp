#include "setopt/problem.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <numbers>

namespace setopt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Family given by a callback fn(i1, x, value, jacobian) with 1-based i1; both outputs pre-sized.
class AnalyticFamily final : public FunctionFamily {
 public:
  using Fn = std::function<void(int, const Vector&, Vector&, Matrix&)>;

  AnalyticFamily(int m, Fn fn) : m_(m), fn_(std::move(fn)) {}

  void evaluate(int i, const Vector& x, Vector* value, Matrix* jacobian) const override {
    Vector v(m_);
    Matrix J(m_, x.size());
    fn_(i + 1, x, v, J);
    if (value) *value = std::move(v);
    if (jacobian) *jacobian = std::move(J);
  }

 private:
  int m_;
  Fn fn_;
};

Problem make(std::string name, int n, int m, int p, Cone cone, SampleBox box, AnalyticFamily::Fn fn) {
  Problem ps;
  ps.name = std::move(name);
  ps.n = n;
  ps.m = m;
  ps.p = p;
  ps.cone = std::move(cone);
  ps.box = std::move(box);
  ps.functions = std::make_shared<AnalyticFamily>(m, std::move(fn));
  return ps;
}

SampleBox square(int n, double lo, double hi) {
  return {Vector::Constant(n, lo), Vector::Constant(n, hi)};
}

Problem ex1() {
  return make("ex1", 1, 2, 50, Cone::orthant(2), square(1, -5, 5),
              [](int i, const Vector& x, Vector& v, Matrix& J) {
                const double t = x(0);
                const double th = kTwoPi * (i - 1) / 50.0;
                const double et = std::exp(t);
                v << t * et + std::sin(th), 2 * t * std::cos(2 * t) + std::cos(th);
                J << (1 + t) * et, 2 * std::cos(2 * t) - 4 * t * std::sin(2 * t);
              });
}

Problem ex2() {
  return make("ex2", 1, 3, 30, Cone::orthant(3), square(1, -5, 5),
              [](int i, const Vector& x, Vector& v, Matrix& J) {
                const double t = x(0);
                const double th = kTwoPi * (i - 1) / 30.0;
                // 1/(1+e^{2t}) written as a logistic in -2t to stay finite for large |t|.
                const double s = 0.5 * (1.0 - std::tanh(t));
                v << 0.27 * std::sin(th) * std::cos(th) + t * t,
                    std::cos(2 * t) + s + 0.27 * std::cos(th), 0.27 * t * t + (i - 1) / 30.0;
                J << 2 * t, -2 * std::sin(2 * t) - 2 * s * (1 - s), 0.54 * t;
              });
}

Problem ex3() {
  return make("ex3", 2, 2, 25, Cone::orthant(2), square(2, -5, 5),
              [](int i, const Vector& x, Vector& v, Matrix& J) {
                const double a = x(0), b = x(1);
                const double th = kTwoPi * (i - 1) / 100.0;
                const double c = std::cos(th), s = std::sin(th);
                v << a * a + std::cos(b) + c * s * s + b * b,
                    2 * a * a + std::sin(a) + c * c * s + 2 * b * b;
                J << 2 * a, -std::sin(b) + 2 * b,  //
                    4 * a + std::cos(a), 4 * b;
              });
}

Problem ex4() {
  return make("ex4", 2, 3, 10, Cone::orthant(3), square(2, -4, 3),
              [](int i, const Vector& x, Vector& v, Matrix& J) {
                const double a = x(0), b = x(1);
                const double th = kTwoPi * (i - 1) / 20.0;
                const double ea = std::exp(a), eb = std::exp(b);
                v << ea + std::sin(th) + eb, 2 * ea + std::cos(th) + 2 * eb,
                    a * a + (i - 1) / 20.0 + b * b;
                J << ea, eb,  //
                    2 * ea, 2 * eb,  //
                    2 * a, 2 * b;
              });
}

Problem ex5() {
  Matrix A(2, 2);
  A << 6, -2, -7, 10;
  SampleBox box{Vector::Constant(1, 2.3350), Vector::Constant(1, 4.4010)};
  return make("ex5", 1, 2, 4, Cone::validate(A, Vector::Ones(2)), box,
              [](int i, const Vector& x, Vector& v, Matrix& J) {
                const double t = x(0);
                const double w = (3.0 - i) / 2.0;
                const double st = std::sin(t), ct = std::cos(t);
                v << 2 * t * t + std::exp(t) + (i - 3) / 2.0, 0.5 * t * ct + w * st * st;
                J << 4 * t + std::exp(t), 0.5 * ct - 0.5 * t * st + 2 * w * st * ct;
              });
}

Problem ex6() {
  Matrix A(2, 2);
  A << 2, -6, -6, 7;
  Vector e(2);
  e << -2, -1;  // (1,1) is not interior to this cone
  const double pi = std::numbers::pi;
  return make("ex6", 2, 2, 100, Cone::validate(A, e), square(2, -pi, pi),
              [](int i, const Vector& x, Vector& v, Matrix& J) {
                const double a = x(0), b = x(1);
                const double th = kTwoPi * (i - 1) / 100.0;
                const double c = std::cos(th), s = std::sin(th);
                const double eab = std::exp(a + b);
                v << a * a + std::sin(a) + a * a * std::cos(b) + 0.25 * c * s * s + eab + b * b,
                    2 * a * a + b * b * std::cos(a) + 0.25 * c * c * s + std::cos(b) + eab +
                        2 * b * b;
                J << 2 * a + std::cos(a) + 2 * a * std::cos(b) + eab,
                    -a * a * std::sin(b) + eab + 2 * b,  //
                    4 * a - b * b * std::sin(a) + eab,
                    2 * b * std::cos(a) - std::sin(b) + eab + 4 * b;
              });
}

/// Uncertainty grid for ex7: 10 equally spaced points of [-1, 1].
double ex7_grid(int k) { return -1.0 + 2.0 * k / 9.0; }

Problem ex7() {
  return make("ex7", 2, 3, 100, Cone::orthant(3), square(2, -50, 50),
              [](int i, const Vector& x, Vector& v, Matrix& J) {
                // u_i enumerates U x U with the first coordinate varying slowest.
                const double u1 = ex7_grid((i - 1) / 10);
                const double u2 = ex7_grid((i - 1) % 10);
                const std::array<std::array<double, 2>, 3> l = {{{0, 0}, {8, 0}, {0, 8}}};
                for (int r = 0; r < 3; ++r) {
                  const double d1 = x(0) - l[r][0] - u1;
                  const double d2 = x(1) - l[r][1] - u2;
                  v(r) = 0.5 * (d1 * d1 + d2 * d2);
                  J(r, 0) = d1;
                  J(r, 1) = d2;
                }
              });
}

}  // namespace

std::vector<std::string> builtin_names() { return {"ex1", "ex2", "ex3", "ex4", "ex5", "ex6", "ex7"}; }

Problem builtin(std::string_view name) {
  if (name == "ex1") return ex1();
  if (name == "ex2") return ex2();
  if (name == "ex3") return ex3();
  if (name == "ex4") return ex4();
  if (name == "ex5") return ex5();
  if (name == "ex6") return ex6();
  if (name == "ex7") return ex7();
  throw Error(ErrorCode::UnknownProblem, "no built-in problem named '" + std::string(name) + "'");
}

}  // namespace setopt
