#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "scr/adversarial.hpp"
#include "scr/augment.hpp"
#include "scr/errors.hpp"
#include "scr/nn/loss.hpp"

using namespace scr;
using namespace scr::adversarial;

namespace {

Classifier baseline(std::uint64_t seed) {
  Classifier m{baseline_network(), {}};
  m.weights = nn::init_weights<float>(m.net, seed);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> u(-0.05f, 0.05f);
  for (auto& p : m.weights.params)
    for (auto& b : p.bias.data()) b = u(gen);
  return m;
}

nn::Tensor<float> images(int n, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  nn::Tensor<float> t({n, 64, 64, 3});
  for (auto& v : t.data()) v = u(gen);
  return t;
}

std::vector<int> labels(int n) {
  std::vector<int> l(n);
  for (int i = 0; i < n; ++i) l[i] = (3 * i + 1) % kClasses;
  return l;
}

void check_budget(const nn::Tensor<float>& x, const nn::Tensor<float>& adv, double eps) {
  CHECK((adv.data() - x.data()).cwiseAbs().maxCoeff() <= static_cast<float>(eps) + 1e-6f);
  CHECK(adv.data().minCoeff() >= 0.0f);
  CHECK(adv.data().maxCoeff() <= 1.0f);
}

RgbImage staircase() {
  RgbImage img(16, 16);
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 16; ++r)
      for (int q = 0; q < 16; ++q) img[c](r, q) = static_cast<float>((r / 4 + c) % 3) / 2.0f;
  return img;
}

}  // namespace

TEST_SUITE("adversarial") {

TEST_CASE("zero budget leaves the input unchanged") {
  const auto m = baseline(1);
  const auto x = images(3, 2);
  const auto l = labels(3);
  CHECK(fgsm(m, x, l, 0.0).data() == x.data());
  AttackConfig cfg;
  cfg.kind = AttackKind::bim;
  cfg.epsilon = 0;
  CHECK(bim(m, x, l, cfg).data() == x.data());
}

TEST_CASE("adversarial examples respect the budget and the unit range") {
  const auto m = baseline(1);
  const auto x = images(4, 3);
  const auto l = labels(4);
  for (double eps : {0.01, 0.1, 0.3, 1.0}) {
    check_budget(x, fgsm(m, x, l, eps), eps);
    AttackConfig cfg;
    cfg.kind = AttackKind::bim;
    cfg.epsilon = eps;
    check_budget(x, bim(m, x, l, cfg), eps);
    cfg.bim_step = eps;
    check_budget(x, bim(m, x, l, cfg), eps);
  }
}

TEST_CASE("one full-size iteration of bim is fgsm") {
  const auto m = baseline(4);
  const auto x = images(3, 5);
  const auto l = labels(3);
  AttackConfig cfg;
  cfg.kind = AttackKind::bim;
  cfg.epsilon = 0.2;
  cfg.bim_step = 0.2;
  cfg.bim_iters = 1;
  CHECK(bim(m, x, l, cfg).data() == fgsm(m, x, l, 0.2).data());
  const auto single = rgb_from_tensor(x, 1);
  const auto a = fgsm(m, single, l[1], 0.2);
  const auto b = rgb_from_tensor(fgsm(m, x, l, 0.2), 1);
  for (int c = 0; c < 3; ++c) CHECK((a[c] == b[c]).all());
}

TEST_CASE("attacks need a trained model") {
  Classifier empty{baseline_network(), {}};
  const auto x = images(1, 1);
  CHECK_THROWS_AS(fgsm(empty, x, labels(1), 0.1), UsageError);
  AttackConfig bad;
  bad.epsilon = 1.5;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("fgsm direction agrees with finite-difference signs") {
  const auto m = baseline(7);
  const auto net = m.net;
  const auto wd = m.weights.cast<double>();
  std::mt19937_64 gen(8);
  int agree = 0, counted = 0;
  for (int s = 0; s < 5; ++s) {
    const auto x = images(1, 100 + s, 0.1f, 0.9f);
    const int label[] = {s % kClasses};
    const auto g = input_gradient(m, x, label);
    const auto adv = fgsm(m, x, label, 0.05);

    auto xd = x.cast<double>();
    auto loss = [&] { return nn::softmax_cross_entropy(nn::forward(net, wd, xd), label).value; };
    const auto coords = oracle::pick_coords(xd.size(), 60, gen);
    const auto fd = oracle::central_difference(loss, xd.raw(), coords, 1e-6);
    for (std::size_t k = 0; k < coords.size(); ++k) {
      const float step = adv[coords[k]] - x[coords[k]];
      CHECK(step == doctest::Approx(g[coords[k]] > 0 ? 0.05 : g[coords[k]] < 0 ? -0.05 : 0.0).epsilon(1e-4));
      if (std::abs(fd[static_cast<Eigen::Index>(k)]) <= 1e-6) continue;
      ++counted;
      agree += (fd[static_cast<Eigen::Index>(k)] > 0) == (step > 0);
    }
  }
  REQUIRE(counted > 100);
  CHECK(static_cast<double>(agree) / counted >= 0.95);
}

TEST_CASE("bit depth reduction") {
  const auto x = images(2, 9);
  const auto one = bit_depth_reduce(x, 1);
  for (float v : one.data()) CHECK((v == 0.0f || v == 1.0f));
  CHECK(bit_depth_reduce(one, 1).data() == one.data());
  const auto three = bit_depth_reduce(x, 3);
  CHECK(bit_depth_reduce(three, 3).data() == three.data());

  nn::Tensor<float> bytes({1, 64, 64, 3});
  for (Eigen::Index k = 0; k < bytes.size(); ++k) bytes[k] = static_cast<float>(k % 256) / 255.0f;
  CHECK(bit_depth_reduce(bytes, 8).data() == bytes.data());
  CHECK_THROWS_AS(bit_depth_reduce(x, 0), DomainError);

  RgbImage img(2, 2);
  for (int c = 0; c < 3; ++c) img[c] << 0.2f, 0.49f, 0.51f, 0.9f;
  const auto r = bit_depth_reduce(img, 1);
  CHECK(r[0](0, 0) == 0.0f);
  CHECK(r[1](0, 1) == 0.0f);
  CHECK(r[2](1, 0) == 1.0f);
  CHECK(r[0](1, 1) == 1.0f);
}

TEST_CASE("median smoothing") {
  const auto fixed = staircase();
  const auto once = median_smooth(fixed, 3);
  const auto twice = median_smooth(once, 3);
  for (int c = 0; c < 3; ++c) {
    CHECK((once[c] == fixed[c]).all());
    CHECK((twice[c] == once[c]).all());
    CHECK((once[c] == augment::median_filter(fixed[c], 3)).all());
  }
  RgbImage spike(5, 5);
  for (int c = 0; c < 3; ++c) spike[c].setZero();
  spike[1](2, 2) = 1.0f;
  CHECK(median_smooth(spike, 3)[1].maxCoeff() == 0.0f);
  CHECK_THROWS_AS(median_smooth(fixed, 4), DomainError);
  CHECK_THROWS_AS(parse_defense("median:2"), DomainError);
}

TEST_CASE("defense and attack names") {
  CHECK(parse_defense("none").kind == DefenseKind::none);
  CHECK(parse_defense("scr").kind == DefenseKind::scr);
  CHECK(parse_defense("bit_depth").param == 1);
  CHECK(parse_defense("bit_depth:4").param == 4);
  CHECK(parse_defense("median").param == 3);
  CHECK(parse_defense("median:5").name() == "median(5x5)");
  CHECK(Defense::bit_depth(1).name() == "bit_depth(1)");
  CHECK_THROWS_AS(parse_defense("jpeg"), DomainError);
  CHECK_THROWS_AS(parse_defense("bit_depth:x"), DomainError);
  CHECK(parse_attack("fgsm") == AttackKind::fgsm);
  CHECK(parse_attack("bim") == AttackKind::bim);
  CHECK_THROWS_AS(parse_attack("cw"), DomainError);
}

TEST_CASE("evaluation report") {
  const auto m = baseline(3);
  const Extractor ext{extractor_network(Profile::mini), nn::init_weights<float>(extractor_network(Profile::mini), 1)};
  const Decoder dec{decoder_network(Profile::mini), nn::init_weights<float>(decoder_network(Profile::mini), 2)};
  const Models models{m, &ext, &dec};
  const auto x = images(6, 11);
  const auto l = labels(6);
  AttackConfig f;
  f.epsilon = 0.1;
  AttackConfig b = f;
  b.kind = AttackKind::bim;
  const std::vector<Defense> defenses{Defense::none(), Defense::bit_depth(1), Defense::median_smooth(3), Defense::scr()};

  const auto r = evaluate(models, {f, b}, defenses, x, l, 42);
  REQUIRE(r.attacks.size() == 3);
  CHECK(r.attacks.front() == "clean");
  CHECK(r.defenses.size() == 4);
  CHECK(r.n == 6);
  CHECK(r.seed == 42);
  for (const auto& row : r.accuracy)
    for (double a : row) CHECK((a >= 0.0 && a <= 1.0));
  CHECK(r.at("clean", "none") == accuracy(predict(m, x), l));
  CHECK(r.at(f.name(), "none") == accuracy(predict(m, fgsm(m, x, l, 0.1)), l));
  CHECK(r.at("clean", "bit_depth(1)") == accuracy(predict(m, bit_depth_reduce(x, 1)), l));

  int correct = 0;
  for (int i = 0; i < 6; ++i) correct += scr_defend(ext, dec, m, rgb_from_tensor(x, i)) == l[i];
  CHECK(r.at("clean", "scr") == doctest::Approx(correct / 6.0));
  CHECK(scr_defend(ext, dec, m, rgb_from_tensor(x, 0)) == scr_defend(ext, dec, m, rgb_from_tensor(x, 0)));

  const auto again = evaluate(models, {f, b}, defenses, x, l, 42);
  CHECK(again.csv() == r.csv());
  CHECK(again.table() == r.table());
  const std::string csv = r.csv();
  CHECK(csv.rfind("attack,defense,accuracy,n,epsilon,seed\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 4);

  CHECK_THROWS_AS(evaluate(models, {f}, defenses, nn::Tensor<float>({0, 64, 64, 3}), {}, 1), DomainError);
  const Models bare{m};
  CHECK_THROWS_AS(evaluate(bare, {f}, {Defense::scr()}, x, l, 1), UsageError);
}

}  // TEST_SUITE
