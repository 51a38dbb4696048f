#include <doctest.h>

#include <numeric>
#include <random>

#include "oracles.hpp"
#include "scr/errors.hpp"
#include "scr/extractor.hpp"

using namespace scr;

namespace {

nn::Model untrained(const nn::Network& net, std::uint64_t seed) { return {net, nn::init_weights<float>(net, seed)}; }

RgbImage random_rgb(std::mt19937_64& gen) {
  std::uniform_real_distribution<float> u(0, 1);
  RgbImage img(kImageSize, kImageSize);
  for (int c = 0; c < 3; ++c)
    for (Eigen::Index k = 0; k < img[c].size(); ++k) img[c].data()[k] = u(gen);
  return img;
}

nn::Tensor<float> random_batch(nn::Shape shape, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> u(0, 1);
  nn::Tensor<float> t(std::move(shape));
  for (auto& v : t.data()) v = u(gen);
  return t;
}

struct TinyData {
  nn::Tensor<float> distorted = random_batch({6, 64, 64, 3}, 1);
  nn::Tensor<float> clean = random_batch({6, 64, 64, 1}, 2);
  nn::Tensor<float> held_distorted = random_batch({2, 64, 64, 3}, 3);
  nn::Tensor<float> held_clean = random_batch({2, 64, 64, 1}, 4);
};

ExtractorTrainConfig tiny_config() {
  ExtractorTrainConfig cfg;
  cfg.train.total_steps = 3;
  cfg.train.batch_size = 2;
  cfg.train.seed = 5;
  cfg.log_every = 0;
  return cfg;
}

// See the decoder gradient tests: the composed network is piecewise linear at a fine scale.
constexpr double kDeepStep = 1e-6;

}  // namespace

TEST_SUITE("extractor") {

TEST_CASE("extracted parameters lie strictly inside the unit interval") {
  const auto ext = untrained(extractor_network(Profile::mini), 1);
  std::mt19937_64 gen(2);
  const auto img = random_rgb(gen);
  const auto s = extract(ext, img);
  for (const auto& p : s)
    for (int k = 0; k < kParamsPerStroke; ++k) {
      CHECK(p.flat()[k] > 0.0);
      CHECK(p.flat()[k] < 1.0);
    }
  const auto again = extract(ext, img);
  for (int i = 0; i < kStrokesPerGlyph; ++i) CHECK(again[i].flat() == s[i].flat());
  CHECK(extractor_network(Profile::full).output_shape() == nn::Shape{36});
  const auto full = extractor_network(Profile::full);
  std::size_t first_fc = 0;
  while (full.layer(first_fc).kind != nn::LayerKind::fully_connected) ++first_fc;
  CHECK(full.shape_at(first_fc) == nn::Shape{2048});
}

TEST_CASE("extraction without weights is a usage error") {
  Extractor e;
  e.net = extractor_network(Profile::mini);
  CHECK_THROWS_AS(extract(e, RgbImage(64, 64)), UsageError);
}

TEST_CASE("reconstruction range and stroke order invariance") {
  const auto ext = untrained(extractor_network(Profile::mini), 3);
  const auto dec = untrained(decoder_network(Profile::mini), 4);
  std::mt19937_64 gen(5);
  const auto rec = reconstruct(ext, dec, random_rgb(gen));
  CHECK(rec.minCoeff() >= 0.0f);
  CHECK(rec.maxCoeff() <= 1.0f);

  std::uniform_real_distribution<double> u(0, 1);
  StrokeSet s;
  for (auto& p : s) {
    WQBCParams::Vector v;
    for (int k = 0; k < kParamsPerStroke; ++k) v[k] = u(gen);
    p = WQBCParams(v);
  }
  const auto base = render_with_decoder(dec, s);
  std::array<int, 4> order{0, 1, 2, 3};
  while (std::next_permutation(order.begin(), order.end())) {
    StrokeSet perm;
    for (int i = 0; i < 4; ++i) perm[i] = s[order[i]];
    CHECK((render_with_decoder(dec, perm) == base).all());
  }
  GrayImage expected = decode(dec, s[0]);
  for (int i = 1; i < 4; ++i) expected = expected.max(decode(dec, s[i]));
  CHECK((expected - base).abs().maxCoeff() < 1e-6f);
}

TEST_CASE("reconstruction gradients against finite differences") {
  const auto ext_net = extractor_network(Profile::mini);
  const auto dec_net = decoder_network(Profile::mini);
  const auto dec_w = nn::init_weights<double>(dec_net, 8);
  std::mt19937_64 gen(9);
  for (int n = 0; n < 3; ++n) {
    const auto ext_w = nn::init_weights<double>(ext_net, 20 + n);
    auto x = random_batch({1, 64, 64, 3}, 30 + n).cast<double>();
    ReconstructionTape<double> tape;
    const auto y = reconstruct_forward(ext_net, ext_w, dec_net, dec_w, x, &tape);
    nn::Tensor<double> r(y.shape());
    std::normal_distribution<double> normal;
    for (auto& v : r.data()) v = normal(gen);
    auto loss = [&] { return (reconstruct_forward(ext_net, ext_w, dec_net, dec_w, x).data().array() * r.data().array()).sum(); };

    nn::Gradients<double> grads;
    const auto gx = reconstruct_backward(ext_net, ext_w, dec_net, dec_w, tape, r, &grads);
    const auto coords = oracle::pick_coords(x.size(), 24, gen);
    const auto fd = oracle::central_difference(loss, x.raw(), coords, kDeepStep);
    Eigen::VectorXd an(coords.size());
    for (std::size_t k = 0; k < coords.size(); ++k) an[k] = gx[coords[k]];
    CHECK(oracle::relative_error(an, fd) <= 1e-2);

    auto w_copy = ext_w;
    const std::size_t last = ext_net.size() - 2;
    auto& weight = w_copy.params[last].weight;
    auto loss_w = [&] {
      return (reconstruct_forward(ext_net, w_copy, dec_net, dec_w, x).data().array() * r.data().array()).sum();
    };
    const auto wc = oracle::pick_coords(weight.size(), 24, gen);
    const auto fdw = oracle::central_difference(loss_w, weight.raw(), wc, kDeepStep);
    Eigen::VectorXd anw(wc.size());
    for (std::size_t k = 0; k < wc.size(); ++k) anw[k] = grads[last].weight[wc[k]];
    CHECK(oracle::relative_error(anw, fdw) <= 1e-2);
  }
}

TEST_CASE("extractor training leaves the decoder untouched and is deterministic") {
  const auto dec = untrained(decoder_network(Profile::mini), 4);
  const auto before = nn::checksum(dec.weights);
  const TinyData d;
  const auto a = train_extractor(d.distorted, d.clean, d.held_distorted, d.held_clean, dec, tiny_config());
  CHECK(nn::checksum(dec.weights) == before);
  const auto b = train_extractor(d.distorted, d.clean, d.held_distorted, d.held_clean, dec, tiny_config());
  CHECK(nn::checksum(a.extractor.weights) == nn::checksum(b.extractor.weights));
  auto zero = tiny_config();
  zero.train.total_steps = 0;
  const auto z1 = train_extractor(d.distorted, d.clean, d.held_distorted, d.held_clean, dec, zero);
  const auto z2 = train_extractor(d.distorted, d.clean, d.held_distorted, d.held_clean, dec, zero);
  CHECK(nn::checksum(z1.extractor.weights) == nn::checksum(z2.extractor.weights));
  CHECK(nn::checksum(z1.extractor.weights) != nn::checksum(a.extractor.weights));
  CHECK(a.initial_held_out_loss ==
        doctest::Approx(reconstruction_loss(z1.extractor, dec, d.held_distorted, d.held_clean)));
}

TEST_CASE("class distribution sums to one") {
  const auto head = untrained(classifier_head_network(), 2);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int n = 0; n < 5; ++n) {
    StrokeSet s;
    for (auto& p : s) {
      WQBCParams::Vector v;
      for (int k = 0; k < kParamsPerStroke; ++k) v[k] = u(gen);
      p = WQBCParams(v);
    }
    const auto probs = classify(head, s);
    CHECK(std::accumulate(probs.begin(), probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-6));
    for (double p : probs) CHECK(p > 0.0);
  }
}

TEST_CASE("uniform logits give a uniform distribution") {
  auto head = untrained(classifier_head_network(), 2);
  auto& out = head.weights.params[head.net.size() - 1];
  out.weight.data().setZero();
  out.bias.data().setConstant(0.7f);
  StrokeSet s;
  for (auto& p : s) p = WQBCParams(WQBCParams::Vector::Constant(0.3));
  for (double p : classify(head, s)) CHECK(p == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("separable toy stroke sets are learned exactly") {
  constexpr int n = 60;
  nn::Tensor<float> x({n, kGlyphParams});
  std::vector<int> labels(n);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<float> jitter(-0.1f, 0.1f);
  for (int i = 0; i < n; ++i) {
    labels[i] = i % 2 == 0 ? 2 : 7;
    for (int k = 0; k < kGlyphParams; ++k) x[i * kGlyphParams + k] = (labels[i] == 2 ? 0.25f : 0.75f) + jitter(gen);
  }
  ClassifierTrainConfig cfg;
  cfg.train.total_steps = 300;
  cfg.train.batch_size = 10;
  cfg.train.seed = 3;
  const auto head = train_classifier_head(x, labels, cfg);
  CHECK(accuracy(predict(head, x), labels) == 1.0);
  CHECK(nn::checksum(train_classifier_head(x, labels, cfg).weights) == nn::checksum(head.weights));

  cfg.train.total_steps = 0;
  const auto init = train_classifier_head(x, labels, cfg);
  CHECK(nn::checksum(init.weights) == nn::checksum(train_classifier_head(x, labels, cfg).weights));
  CHECK(nn::checksum(init.weights) != nn::checksum(head.weights));
}

TEST_CASE("baseline classifier loss decreases") {
  constexpr int n = 20;
  nn::Tensor<float> x({n, 64, 64, 3});
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = i % 2;
    // class 0 bright on the left half, class 1 on the right half
    for (int r = 0; r < 64; ++r)
      for (int c = 0; c < 64; ++c)
        for (int ch = 0; ch < 3; ++ch) x[((i * 64 + r) * 64 + c) * 3 + ch] = (c < 32) == (labels[i] == 0) ? 1.0f : 0.0f;
  }
  ClassifierTrainConfig cfg;
  cfg.train.total_steps = 0;
  cfg.train.batch_size = 4;
  const auto before = train_baseline_classifier(x, labels, cfg);
  cfg.train.total_steps = 40;
  const auto after = train_baseline_classifier(x, labels, cfg);
  auto loss = [&](const Classifier& m) {
    const auto p = class_probabilities(m, x);
    double l = 0;
    for (int i = 0; i < n; ++i) l -= std::log(p[i * kClasses + labels[i]]);
    return l / n;
  };
  CHECK(loss(after) < loss(before));
  CHECK(accuracy(predict(after, x), labels) == 1.0);
}

TEST_CASE("accuracy") {
  const int p[] = {1, 2, 3, 4};
  const int l[] = {1, 2, 0, 4};
  CHECK(accuracy(p, l) == 0.75);
}

}  // TEST_SUITE
