#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the code under test except to obtain values to compare.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "scr/nn/loss.hpp"
#include "scr/nn/network.hpp"
#include "scr/stroke.hpp"

namespace oracle {

constexpr int kSide = 256;

struct Disc {
  double x, y, r;
};

// Bernstein blend of already-denormalized control values.
inline double bernstein(double a, double b, double c, double t) {
  const double s = 1.0 - t;
  return s * s * a + 2.0 * s * t * b + t * t * c;
}

inline Disc curve_disc(const scr::WQBCParams& c, double t) {
  const auto& v = c.flat();
  auto pos = [](double u) { return 255.0 * u; };
  auto rad = [](double u) { return 2.0 + 30.0 * u; };
  return {bernstein(pos(v[0]), pos(v[3]), pos(v[6]), t), bernstein(pos(v[1]), pos(v[4]), pos(v[7]), t),
          bernstein(rad(v[2]), rad(v[5]), rad(v[8]), t)};
}

using Mask = std::vector<std::uint8_t>;  // row-major kSide x kSide

// Marks every pixel whose distance to some sampled centre minus the radius there is <= 0.
inline void mark_disc(Mask& m, const Disc& d) {
  const int i0 = std::max(0, static_cast<int>(std::floor(d.y - d.r)) - 1);
  const int i1 = std::min(kSide - 1, static_cast<int>(std::ceil(d.y + d.r)) + 1);
  const int j0 = std::max(0, static_cast<int>(std::floor(d.x - d.r)) - 1);
  const int j1 = std::min(kSide - 1, static_cast<int>(std::ceil(d.x + d.r)) + 1);
  for (int i = i0; i <= i1; ++i)
    for (int j = j0; j <= j1; ++j)
      if (std::sqrt((i - d.y) * (i - d.y) + (j - d.x) * (j - d.x)) - d.r <= 0) m[i * kSide + j] = 1;
}

// Dense distance-to-curve mask over `samples` values of t spanning [0, 1].
inline Mask dense_stroke_mask(const scr::WQBCParams& c, int samples = 10000) {
  Mask m(kSide * kSide, 0);
  for (int k = 0; k < samples; ++k) mark_disc(m, curve_disc(c, static_cast<double>(k) / (samples - 1)));
  return m;
}

// Number of lattice pixels within the closed disc, by scanning the whole canvas.
inline int disc_pixel_count(double x, double y, double r) {
  int n = 0;
  for (int i = 0; i < kSide; ++i)
    for (int j = 0; j < kSide; ++j) n += (i - y) * (i - y) + (j - x) * (j - x) <= r * r;
  return n;
}

template <typename Canvas>
Mask to_mask(const Canvas& canvas) {
  Mask m(kSide * kSide);
  for (int i = 0; i < kSide; ++i)
    for (int j = 0; j < kSide; ++j) m[i * kSide + j] = canvas(i, j) != 0;
  return m;
}

inline double iou(const Mask& a, const Mask& b) {
  long inter = 0, uni = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    inter += a[k] && b[k];
    uni += a[k] || b[k];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// ---------------------------------------------------------------------------
// Finite differences.

/// Relative error ||a - b|| / max(||a||, ||b||), zero when both vanish.
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale < 1e-12 ? 0.0 : (a - b).norm() / scale;
}

/// Central difference of f with respect to the entries of x listed in `coords`.
inline Eigen::VectorXd central_difference(const std::function<double()>& f, double* x, const std::vector<long>& coords,
                                          double h = 1e-3) {
  Eigen::VectorXd g(static_cast<Eigen::Index>(coords.size()));
  for (std::size_t k = 0; k < coords.size(); ++k) {
    double& v = x[coords[k]];
    const double saved = v;
    v = saved + h;
    const double up = f();
    v = saved - h;
    const double down = f();
    v = saved;
    g[static_cast<Eigen::Index>(k)] = (up - down) / (2 * h);
  }
  return g;
}

inline std::vector<long> pick_coords(long size, int max_count, std::mt19937_64& gen) {
  std::vector<long> all(size);
  for (long i = 0; i < size; ++i) all[i] = i;
  if (size <= max_count) return all;
  std::shuffle(all.begin(), all.end(), gen);
  all.resize(max_count);
  std::sort(all.begin(), all.end());
  return all;
}

struct GradientReport {
  double input_error = 0;
  double weight_error = 0;  // worst over parameter tensors
};

/// Checks backward() of a double network against central differences of the
/// scalar L = sum(R * forward(x)) for a fixed random projection R.
inline GradientReport check_network_gradients(const scr::nn::Network& net, scr::nn::Weights<double> weights,
                                              scr::nn::Tensor<double> input, std::uint64_t seed,
                                              int coords_per_tensor = 24, double h = 1e-3) {
  using namespace scr::nn;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Tensor<double> probe = forward(net, weights, input);
  for (Eigen::Index k = 0; k < probe.size(); ++k) probe[k] = normal(gen);

  Tape<double> tape;
  forward(net, weights, input, &tape);
  Gradients<double> grads;
  const Tensor<double> dx = backward(net, weights, tape, probe, &grads);

  auto loss = [&] { return forward(net, weights, input).data().dot(probe.data()); };
  GradientReport report;
  {
    const auto coords = pick_coords(input.size(), coords_per_tensor, gen);
    Eigen::VectorXd analytic(static_cast<Eigen::Index>(coords.size()));
    for (std::size_t k = 0; k < coords.size(); ++k) analytic[static_cast<Eigen::Index>(k)] = dx[coords[k]];
    report.input_error = relative_error(analytic, central_difference(loss, input.raw(), coords, h));
  }
  for (std::size_t l = 0; l < net.size(); ++l) {
    if (!net.layer(l).has_parameters()) continue;
    for (int which = 0; which < 2; ++which) {
      auto& param = which == 0 ? weights.params[l].weight : weights.params[l].bias;
      const auto& g = which == 0 ? grads[l].weight : grads[l].bias;
      const auto coords = pick_coords(param.size(), coords_per_tensor, gen);
      Eigen::VectorXd analytic(static_cast<Eigen::Index>(coords.size()));
      for (std::size_t k = 0; k < coords.size(); ++k) analytic[static_cast<Eigen::Index>(k)] = g[coords[k]];
      report.weight_error =
          std::max(report.weight_error, relative_error(analytic, central_difference(loss, param.raw(), coords, h)));
    }
  }
  return report;
}

/// Random tensor whose entries stay at least `margin` away from zero, keeping
/// ReLU kinks out of reach of the finite-difference step.
inline scr::nn::Tensor<double> away_from_zero(const scr::nn::Shape& shape, std::mt19937_64& gen, double margin = 0.05) {
  scr::nn::Tensor<double> t(shape);
  std::uniform_real_distribution<double> u(margin, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (Eigen::Index k = 0; k < t.size(); ++k) t[k] = sign(gen) ? u(gen) : -u(gen);
  return t;
}

/// Random tensor holding a permutation of well-separated values, so max-pool
/// windows never contain near ties.
inline scr::nn::Tensor<double> distinct_values(const scr::nn::Shape& shape, std::mt19937_64& gen) {
  scr::nn::Tensor<double> t(shape);
  std::vector<double> v(static_cast<std::size_t>(t.size()));
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = -1.0 + 0.01 * static_cast<double>(k);
  std::shuffle(v.begin(), v.end(), gen);
  for (Eigen::Index k = 0; k < t.size(); ++k) t[k] = v[static_cast<std::size_t>(k)];
  return t;
}

// ---------------------------------------------------------------------------
// Direct convolution, [N,H,W,C] with weights [K,3,3,C], zero padding 1.

inline scr::nn::Tensor<double> naive_conv3x3(const scr::nn::Tensor<double>& x, const scr::nn::Tensor<double>& w,
                                              const scr::nn::Tensor<double>& b) {
  const int n = x.dim(0), h = x.dim(1), wd = x.dim(2), c = x.dim(3), k = w.dim(0);
  scr::nn::Tensor<double> y({n, h, wd, k});
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < wd; ++j)
        for (int o = 0; o < k; ++o) {
          double acc = b[o];
          for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
              const int ii = i + di, jj = j + dj;
              if (ii < 0 || jj < 0 || ii >= h || jj >= wd) continue;
              for (int q = 0; q < c; ++q)
                acc += w[((o * 3 + di + 1) * 3 + dj + 1) * c + q] * x[((s * h + ii) * wd + jj) * c + q];
            }
          y[((s * h + i) * wd + j) * k + o] = acc;
        }
  return y;
}

}  // namespace oracle
