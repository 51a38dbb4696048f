#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "scr/errors.hpp"
#include "scr/stroke.hpp"

using namespace scr;

namespace {

WQBCParams random_params(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0, 1);
  WQBCParams::Vector v;
  for (int k = 0; k < kParamsPerStroke; ++k) v[k] = u(gen);
  return WQBCParams(v);
}

void check_point(const CanvasPoint& p, double x, double y, double w) {
  CHECK(p.x == doctest::Approx(x).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(y).epsilon(1e-12));
  CHECK(p.w == doctest::Approx(w).epsilon(1e-12));
}

}  // namespace

TEST_SUITE("stroke") {

TEST_CASE("denormalize maps range endpoints and midpoint") {
  check_point(denormalize({0, 0, 0}), 0, 0, 2);
  check_point(denormalize({1, 1, 1}), 255, 255, 32);
  check_point(denormalize({0.5, 0.5, 0.5}), 127.5, 127.5, 17);
}

TEST_CASE("out-of-range parameters are rejected") {
  CHECK_THROWS_AS(denormalize({1.01, 0, 0}), DomainError);
  CHECK_THROWS_AS(denormalize({0, -0.01, 0}), DomainError);
  WQBCParams::Vector v = WQBCParams::Vector::Constant(0.5);
  v[4] = 1.5;
  CHECK_THROWS_AS(WQBCParams{v}, DomainError);
  v[4] = std::nan("");
  CHECK_THROWS_AS(WQBCParams{v}, DomainError);
}

TEST_CASE("flattened order is x0 y0 w0 x1 y1 w1 x2 y2 w2") {
  const WQBCParams c({0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}, {0.7, 0.8, 0.9});
  for (int k = 0; k < 9; ++k) CHECK(c.flat()[k] == doctest::Approx(0.1 * (k + 1)));
  const double flat[36] = {};
  const auto set = stroke_set_from_span(std::span<const double>(flat));
  CHECK(set.size() == 4);
  CHECK_THROWS_AS(stroke_set_from_span(std::span<const double>(flat, 35)), DomainError);
}

TEST_CASE("eval_curve interpolates endpoints exactly") {
  std::mt19937_64 gen(1);
  for (int n = 0; n < 50; ++n) {
    const auto c = random_params(gen);
    const auto a = eval_curve(c, 0), b = denormalize(c.point(0));
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.w == b.w);
    const auto e = eval_curve(c, 1), f = denormalize(c.point(2));
    CHECK(e.x == f.x);
    CHECK(e.y == f.y);
    CHECK(e.w == f.w);
  }
}

TEST_CASE("eval_curve midpoint of a symmetric arch") {
  const WQBCParams c({0, 0, 0}, {1, 1, 1}, {0, 0, 0});
  check_point(eval_curve(c, 0.5), 127.5, 127.5, 17);
}

TEST_CASE("eval_curve rejects t outside [0,1]") {
  const WQBCParams c;
  CHECK_THROWS_AS(eval_curve(c, -1e-9), DomainError);
  CHECK_THROWS_AS(eval_curve(c, 1.0 + 1e-9), DomainError);
}

TEST_CASE("eval_curve matches an independent Bernstein blend") {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int n = 0; n < 100; ++n) {
    const auto c = random_params(gen);
    const double t = u(gen);
    const auto p = eval_curve(c, t);
    const auto q = oracle::curve_disc(c, t);
    CHECK(p.x == doctest::Approx(q.x).epsilon(1e-12));
    CHECK(p.y == doctest::Approx(q.y).epsilon(1e-12));
    CHECK(p.w == doctest::Approx(q.r).epsilon(1e-12));
  }
}

TEST_CASE("reversal symmetry") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int n = 0; n < 100; ++n) {
    const auto c = random_params(gen);
    const double t = u(gen);
    const auto a = eval_curve(c, t), b = eval_curve(reversed(c), 1 - t);
    CHECK(a.x == doctest::Approx(b.x).epsilon(1e-12));
    CHECK(a.y == doctest::Approx(b.y).epsilon(1e-12));
    CHECK(a.w == doctest::Approx(b.w).epsilon(1e-12));
  }
}

TEST_CASE("curve stays inside the control hull per component") {
  std::mt19937_64 gen(4);
  for (int n = 0; n < 100; ++n) {
    const auto c = random_params(gen);
    const CanvasPoint p[3] = {denormalize(c.point(0)), denormalize(c.point(1)), denormalize(c.point(2))};
    for (int k = 0; k <= 64; ++k) {
      const auto q = eval_curve(c, k / 64.0);
      auto within = [](double v, double a, double b, double d) {
        return v >= std::min({a, b, d}) - 1e-9 && v <= std::max({a, b, d}) + 1e-9;
      };
      CHECK(within(q.x, p[0].x, p[1].x, p[2].x));
      CHECK(within(q.y, p[0].y, p[1].y, p[2].y));
      CHECK(within(q.w, p[0].w, p[1].w, p[2].w));
    }
  }
}

TEST_CASE("affine maps commute with evaluation") {
  // x -> 0.5 x + 0.25 in normalized units is x' -> 0.5 x' + 63.75 on the canvas.
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int n = 0; n < 50; ++n) {
    const auto c = random_params(gen);
    WQBCParams::Vector v = c.flat();
    for (int k = 0; k < 3; ++k) {
      v[3 * k] = 0.5 * v[3 * k] + 0.25;
      v[3 * k + 1] = 0.5 * v[3 * k + 1] + 0.25;
    }
    const double t = u(gen);
    const auto a = eval_curve(WQBCParams(v), t), b = eval_curve(c, t);
    CHECK(a.x == doctest::Approx(0.5 * b.x + 63.75).epsilon(1e-12));
    CHECK(a.y == doctest::Approx(0.5 * b.y + 63.75).epsilon(1e-12));
    CHECK(a.w == doctest::Approx(b.w).epsilon(1e-12));
  }
}

}  // TEST_SUITE
