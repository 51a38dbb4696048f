#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "scr/decoder.hpp"
#include "scr/errors.hpp"

using namespace scr;

namespace {

WQBCParams random_params(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0, 1);
  WQBCParams::Vector v;
  for (int k = 0; k < kParamsPerStroke; ++k) v[k] = u(gen);
  return WQBCParams(v);
}

Decoder untrained(std::uint64_t seed) {
  Decoder d;
  d.net = decoder_network(Profile::mini);
  d.weights = nn::init_weights<float>(d.net, seed);
  return d;
}

DecoderTrainConfig tiny_run(long steps) {
  DecoderTrainConfig cfg;
  cfg.train.total_steps = steps;
  cfg.train.batch_size = 4;
  cfg.train.seed = 11;
  cfg.raster_steps = 64;
  cfg.validation_size = 16;
  cfg.log_every = steps;
  return cfg;
}

// Deep ReLU stacks have kinks within 1e-3 of almost any point; a smaller step
// keeps the difference quotient on one linear piece.
constexpr double kDeepStep = 1e-6;

}  // namespace

TEST_SUITE("decoder") {

TEST_CASE("decoded image shape and range") {
  const auto d = untrained(3);
  std::mt19937_64 gen(1);
  for (int i = 0; i < 5; ++i) {
    const auto img = decode(d, random_params(gen));
    CHECK(img.rows() == kImageSize);
    CHECK(img.cols() == kImageSize);
    CHECK(img.minCoeff() > 0.0f);
    CHECK(img.maxCoeff() < 1.0f);
  }
  CHECK(decoder_network(Profile::full).output_shape() == nn::Shape{64, 64, 1});
}

TEST_CASE("decoding without weights is a usage error") {
  Decoder d;
  d.net = decoder_network(Profile::mini);
  CHECK_THROWS_AS(decode(d, WQBCParams(WQBCParams::Vector::Constant(0.5))), UsageError);
  d.weights = nn::init_weights<float>(decoder_network(Profile::full), 0);
  CHECK_THROWS_AS(decode(d, WQBCParams(WQBCParams::Vector::Constant(0.5))), UsageError);
}

TEST_CASE("gradient of the mean output with respect to the nine parameters") {
  const auto net = decoder_network(Profile::mini);
  std::mt19937_64 gen(5);
  std::vector<long> all(kParamsPerStroke);
  for (int k = 0; k < kParamsPerStroke; ++k) all[k] = k;
  for (int n = 0; n < 10; ++n) {
    const auto w = nn::init_weights<double>(net, 100 + n);
    nn::Tensor<double> x({1, kParamsPerStroke});
    const auto p = random_params(gen);
    for (int k = 0; k < kParamsPerStroke; ++k) x[k] = p.flat()[k];
    nn::Tape<double> tape;
    const auto y = nn::forward(net, w, x, &tape);
    nn::Tensor<double> g(y.shape());
    g.data().setConstant(1.0 / static_cast<double>(y.size()));
    const auto analytic = nn::backward(net, w, tape, g, static_cast<nn::Gradients<double>*>(nullptr));
    const auto fd = oracle::central_difference([&] { return nn::forward(net, w, x).data().mean(); }, x.raw(), all, kDeepStep);
    CHECK(oracle::relative_error(analytic.data(), fd) <= 1e-2);
  }
}

TEST_CASE("decoder parameter gradients") {
  const auto net = decoder_network(Profile::mini);
  std::mt19937_64 gen(9);
  auto x = oracle::away_from_zero({2, kParamsPerStroke}, gen);
  x.data() = x.data().cwiseAbs();
  // Zero biases behind dead regions would put ReLU inputs exactly on the kink.
  auto w = nn::init_weights<double>(net, 4);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto& p : w.params) p.bias.data() = p.bias.data().unaryExpr([&](double) { return u(gen); });
  const auto report = oracle::check_network_gradients(net, w, x, 17, 24, kDeepStep);
  CHECK(report.input_error <= 1e-2);
  CHECK(report.weight_error <= 1e-2);
}

TEST_CASE("zero training steps returns the initial weights") {
  const auto a = train_decoder(tiny_run(0));
  const auto b = train_decoder(tiny_run(0));
  CHECK(a.log.empty());
  CHECK(nn::checksum(a.decoder.weights) == nn::checksum(b.decoder.weights));
  auto moved = tiny_run(1);
  CHECK(nn::checksum(train_decoder(moved).decoder.weights) != nn::checksum(a.decoder.weights));
  for (const auto& p : a.decoder.weights.params) CHECK((p.bias.data().array() == 0).all());
}

TEST_CASE("training is deterministic per seed") {
  const auto a = train_decoder(tiny_run(6));
  const auto b = train_decoder(tiny_run(6));
  CHECK(nn::checksum(a.decoder.weights) == nn::checksum(b.decoder.weights));
  auto other = tiny_run(6);
  other.train.seed = 12;
  CHECK(nn::checksum(train_decoder(other).decoder.weights) != nn::checksum(a.decoder.weights));
  auto threaded = tiny_run(6);
  threaded.workers = 3;
  CHECK(nn::checksum(train_decoder(threaded).decoder.weights) == nn::checksum(a.decoder.weights));
}

TEST_CASE("validation loss at the end does not exceed the start") {
  auto cfg = tiny_run(150);
  cfg.train.batch_size = 8;
  cfg.log_every = 50;
  const auto r = train_decoder(cfg);
  REQUIRE(r.log.size() >= 2);
  CHECK(r.log.front().step == 0);
  CHECK(r.log.back().step == 149);
  CHECK(r.log.back().validation_loss <= r.log.front().validation_loss);
  for (const auto& e : r.log) CHECK(e.learning_rate == doctest::Approx(nn::learning_rate_at(cfg.train, e.step)));
}

TEST_CASE("decoder_mse matches a direct computation") {
  const auto d = untrained(2);
  std::mt19937_64 gen(3);
  std::vector<WQBCParams> p;
  for (int i = 0; i < 3; ++i) p.push_back(random_params(gen));
  const auto t = rasterize_all(p, StepCount(64));
  double direct = 0;
  for (int i = 0; i < 3; ++i) direct += (decode(d, p[i]) - t[i]).cast<double>().square().sum();
  CHECK(decoder_mse(d, p, t) == doctest::Approx(direct / (3.0 * 4096)).epsilon(1e-5));
  CHECK_THROWS_AS(decoder_mse(d, p, std::span(t).first(2)), DomainError);
}

}  // TEST_SUITE
