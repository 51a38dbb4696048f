#include "scr/adversarial.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "scr/augment.hpp"
#include "scr/errors.hpp"
#include "scr/nn/loss.hpp"

namespace scr::adversarial {

namespace {

constexpr int kChunk = 64;

template <typename F>
nn::Tensor<float> chunked(const nn::Tensor<float>& images, F&& f) {
  const int n = images.dim(0);
  nn::Tensor<float> out(images.shape());
  const Eigen::Index per = n > 0 ? images.size() / n : 0;
  for (int i = 0; i < n; i += kChunk) {
    std::vector<int> idx(std::min(kChunk, n - i));
    std::iota(idx.begin(), idx.end(), i);
    const auto part = f(nn::gather(images, idx), idx);
    out.data().segment(i * per, part.size()) = part.data();
  }
  return out;
}

nn::Tensor<float> one_image(const RgbImage& x) {
  const RgbImage one[] = {x};
  return rgb_tensor(one);
}

}  // namespace

void AttackConfig::validate() const {
  if (!(epsilon >= 0 && epsilon <= 1)) throw DomainError("adversarial: epsilon must be in [0,1]");
  if (!(step() >= 0)) throw DomainError("adversarial: bim step must be >= 0");
  if (bim_iters < 1) throw DomainError("adversarial: bim iterations must be >= 1");
}

std::string AttackConfig::name() const { return kind == AttackKind::fgsm ? "fgsm" : "bim"; }

AttackKind parse_attack(const std::string& text) {
  if (text == "fgsm") return AttackKind::fgsm;
  if (text == "bim") return AttackKind::bim;
  throw DomainError("adversarial: unknown attack '" + text + "'");
}

void Defense::validate() const {
  if (kind == DefenseKind::bit_depth && param < 1) throw DomainError("adversarial: bit depth must be >= 1");
  if (kind == DefenseKind::median_smooth && (param < 1 || param % 2 == 0))
    throw DomainError("adversarial: median kernel must be odd");
}

std::string Defense::name() const {
  switch (kind) {
    case DefenseKind::none: return "none";
    case DefenseKind::bit_depth: return "bit_depth(" + std::to_string(param) + ")";
    case DefenseKind::median_smooth: return "median(" + std::to_string(param) + "x" + std::to_string(param) + ")";
    case DefenseKind::scr: return "scr";
  }
  return "?";
}

Defense parse_defense(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  auto arg = [&](int fallback) {
    if (colon == std::string::npos) return fallback;
    try {
      std::size_t used = 0;
      const int v = std::stoi(text.substr(colon + 1), &used);
      if (used == text.size() - colon - 1) return v;
    } catch (const std::exception&) {
    }
    throw DomainError("adversarial: bad defense argument in '" + text + "'");
  };
  Defense d;
  if (head == "none" && colon == std::string::npos) d = Defense::none();
  else if (head == "scr" && colon == std::string::npos) d = Defense::scr();
  else if (head == "bit_depth") d = Defense::bit_depth(arg(1));
  else if (head == "median") d = Defense::median_smooth(arg(3));
  else throw DomainError("adversarial: unknown defense '" + text + "'");
  d.validate();
  return d;
}

nn::Tensor<float> input_gradient(const Classifier& model, const nn::Tensor<float>& images,
                                 std::span<const int> labels) {
  if (model.weights.empty()) throw UsageError("adversarial: classifier has no weights");
  if (static_cast<std::size_t>(images.dim(0)) != labels.size())
    throw DomainError("adversarial: image/label count mismatch");
  nn::Tape<float> tape;
  const auto logits = nn::forward(model.net, model.weights, images, &tape);
  const auto loss = nn::softmax_cross_entropy(logits, labels);
  return nn::backward(model.net, model.weights, tape, loss.gradient, static_cast<nn::Gradients<float>*>(nullptr));
}

nn::Tensor<float> fgsm(const Classifier& model, const nn::Tensor<float>& images, std::span<const int> labels,
                       double epsilon) {
  return bim(model, images, labels, {.kind = AttackKind::fgsm, .epsilon = epsilon, .bim_step = epsilon, .bim_iters = 1});
}

RgbImage fgsm(const Classifier& model, const RgbImage& x, int label, double epsilon) {
  const int y[] = {label};
  return rgb_from_tensor(fgsm(model, one_image(x), y, epsilon), 0);
}

nn::Tensor<float> bim(const Classifier& model, const nn::Tensor<float>& images, std::span<const int> labels,
                      const AttackConfig& config) {
  config.validate();
  if (model.weights.empty()) throw UsageError("adversarial: classifier has no weights");
  const int iters = config.kind == AttackKind::fgsm ? 1 : config.bim_iters;
  const float eps = static_cast<float>(config.epsilon);
  const float step = static_cast<float>(config.kind == AttackKind::fgsm ? config.epsilon : config.step());
  return chunked(images, [&](const nn::Tensor<float>& x, const std::vector<int>& idx) {
    std::vector<int> y;
    for (int i : idx) y.push_back(labels[i]);
    const auto lo = (x.data().array() - eps).max(0.0f).eval();
    const auto hi = (x.data().array() + eps).min(1.0f).eval();
    nn::Tensor<float> adv = x;
    for (int it = 0; it < iters && eps > 0; ++it) {
      const auto g = input_gradient(model, adv, y);
      adv.data().array() = (adv.data().array() + step * g.data().array().sign()).max(lo).min(hi);
    }
    return adv;
  });
}

RgbImage bim(const Classifier& model, const RgbImage& x, int label, const AttackConfig& config) {
  const int y[] = {label};
  return rgb_from_tensor(bim(model, one_image(x), y, config), 0);
}

nn::Tensor<float> attack(const Classifier& model, const nn::Tensor<float>& images, std::span<const int> labels,
                         const AttackConfig& config) {
  return config.kind == AttackKind::fgsm ? fgsm(model, images, labels, config.epsilon)
                                         : bim(model, images, labels, config);
}

RgbImage bit_depth_reduce(const RgbImage& img, int bits) {
  if (bits < 1) throw DomainError("adversarial: bit depth must be >= 1");
  const float levels = static_cast<float>((1 << std::min(bits, 24)) - 1);
  RgbImage out = img;
  for (int c = 0; c < 3; ++c) out[c] = (img[c] * levels).round() / levels;
  return out;
}

nn::Tensor<float> bit_depth_reduce(const nn::Tensor<float>& images, int bits) {
  if (bits < 1) throw DomainError("adversarial: bit depth must be >= 1");
  const float levels = static_cast<float>((1 << std::min(bits, 24)) - 1);
  nn::Tensor<float> out = images;
  out.data().array() = (images.data().array() * levels).round() / levels;
  return out;
}

RgbImage median_smooth(const RgbImage& img, int k) {
  RgbImage out = img;
  for (int c = 0; c < 3; ++c) out[c] = augment::median_filter(img[c], k);
  return out;
}

nn::Tensor<float> median_smooth(const nn::Tensor<float>& images, int k) {
  nn::Tensor<float> out = images;
  const Eigen::Index per = static_cast<Eigen::Index>(kImageSize) * kImageSize * 3;
  for (int i = 0; i < images.dim(0); ++i) {
    const auto img = median_smooth(rgb_from_tensor(images, i), k);
    const RgbImage one[] = {img};
    out.data().segment(i * per, per) = rgb_tensor(one).data();
  }
  return out;
}

int scr_defend(const Extractor& extractor, const Decoder& decoder, const Classifier& classifier, const RgbImage& x) {
  const RgbImage one[] = {replicate(reconstruct(extractor, decoder, x))};
  return predict(classifier, rgb_tensor(one)).front();
}

std::vector<int> defended_predictions(const Models& models, const Defense& defense, const nn::Tensor<float>& images) {
  defense.validate();
  switch (defense.kind) {
    case DefenseKind::none: return predict(models.baseline, images);
    case DefenseKind::bit_depth: return predict(models.baseline, bit_depth_reduce(images, defense.param));
    case DefenseKind::median_smooth: return predict(models.baseline, median_smooth(images, defense.param));
    case DefenseKind::scr: {
      if (!models.extractor || !models.decoder) throw UsageError("adversarial: scr defense needs extractor and decoder");
      const auto cleaned = chunked(images, [&](const nn::Tensor<float>& x, const std::vector<int>&) {
        const auto rec = reconstruct_batch(*models.extractor, *models.decoder, x);
        nn::Tensor<float> rgb(x.shape());
        for (Eigen::Index p = 0; p < rec.size(); ++p)
          for (int c = 0; c < 3; ++c) rgb[p * 3 + c] = rec[p];
        return rgb;
      });
      return predict(models.baseline, cleaned);
    }
  }
  throw DomainError("adversarial: unknown defense");
}

double EvalReport::at(const std::string& attack, const std::string& defense) const {
  for (std::size_t a = 0; a < attacks.size(); ++a)
    for (std::size_t d = 0; d < defenses.size(); ++d)
      if (attacks[a] == attack && defenses[d] == defense) return accuracy[a][d];
  throw DomainError("adversarial: no report cell " + attack + "/" + defense);
}

std::string EvalReport::table() const {
  std::size_t first = 7;
  for (const auto& d : defenses) first = std::max(first, d.size());
  std::size_t width = 8;
  for (const auto& a : attacks) width = std::max(width, a.size() + 1);
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(first)) << "defense";
  for (const auto& a : attacks) os << std::right << std::setw(static_cast<int>(width)) << a;
  os << '\n';
  for (std::size_t d = 0; d < defenses.size(); ++d) {
    os << std::left << std::setw(static_cast<int>(first)) << defenses[d];
    for (std::size_t a = 0; a < attacks.size(); ++a) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(2) << 100.0 * accuracy[a][d] << '%';
      os << std::right << std::setw(static_cast<int>(width)) << cell.str();
    }
    os << '\n';
  }
  os << "n=" << n << " epsilon=" << epsilon << " seed=" << seed << '\n';
  return os.str();
}

std::string EvalReport::csv() const {
  std::ostringstream os;
  os << "attack,defense,accuracy,n,epsilon,seed\n";
  for (std::size_t a = 0; a < attacks.size(); ++a)
    for (std::size_t d = 0; d < defenses.size(); ++d)
      os << attacks[a] << ',' << defenses[d] << ',' << std::setprecision(6) << accuracy[a][d] << ',' << n << ','
         << epsilon << ',' << seed << '\n';
  return os.str();
}

EvalReport evaluate(const Models& models, const std::vector<AttackConfig>& attacks,
                    const std::vector<Defense>& defenses, const nn::Tensor<float>& images,
                    std::span<const int> labels, std::uint64_t seed) {
  if (images.size() == 0 || labels.empty()) throw DomainError("adversarial: empty test set");
  if (static_cast<std::size_t>(images.dim(0)) != labels.size())
    throw DomainError("adversarial: image/label count mismatch");
  EvalReport report;
  report.n = images.dim(0);
  report.seed = seed;
  report.epsilon = attacks.empty() ? 0.0 : attacks.front().epsilon;
  for (const auto& d : defenses) report.defenses.push_back(d.name());

  auto score = [&](const nn::Tensor<float>& x) {
    std::vector<double> row;
    for (const auto& d : defenses) row.push_back(accuracy(defended_predictions(models, d, x), labels));
    return row;
  };
  report.attacks.push_back("clean");
  report.accuracy.push_back(score(images));
  for (const auto& a : attacks) {
    report.attacks.push_back(a.name());
    report.accuracy.push_back(score(attack(models.baseline, images, labels, a)));
  }
  return report;
}

}  // namespace scr::adversarial
