#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scr/extractor.hpp"
#include "scr/image.hpp"

namespace scr::adversarial {

enum class AttackKind { fgsm, bim };

struct AttackConfig {
  AttackKind kind = AttackKind::fgsm;
  double epsilon = 0.3;
  /// Per-iteration step; defaults to epsilon / 4 when unset.
  std::optional<double> bim_step;
  int bim_iters = 10;

  double step() const { return bim_step.value_or(epsilon / 4); }
  /// Throws DomainError unless epsilon in [0,1], step >= 0, iters >= 1.
  void validate() const;
  std::string name() const;
};

AttackKind parse_attack(const std::string& text);

enum class DefenseKind { none, bit_depth, median_smooth, scr };

struct Defense {
  DefenseKind kind = DefenseKind::none;
  int param = 0;  // bits or kernel size

  static Defense none() { return {}; }
  static Defense bit_depth(int bits) { return {DefenseKind::bit_depth, bits}; }
  static Defense median_smooth(int k) { return {DefenseKind::median_smooth, k}; }
  static Defense scr() { return {DefenseKind::scr, 0}; }

  void validate() const;
  std::string name() const;
};

/// Accepts none, scr, bit_depth[:bits] (default 1), median[:k] (default 3).
Defense parse_defense(const std::string& text);

/// Gradient of the batch cross-entropy with respect to the input images.
nn::Tensor<float> input_gradient(const Classifier& model, const nn::Tensor<float>& images,
                                 std::span<const int> labels);

/// x' = clip(x + eps * sign(grad), 0, 1) on [N,64,64,3] batches.
nn::Tensor<float> fgsm(const Classifier& model, const nn::Tensor<float>& images, std::span<const int> labels,
                       double epsilon);
RgbImage fgsm(const Classifier& model, const RgbImage& x, int label, double epsilon);

/// Iterated signed steps, each projected onto the eps-ball around x and onto [0,1].
nn::Tensor<float> bim(const Classifier& model, const nn::Tensor<float>& images, std::span<const int> labels,
                      const AttackConfig& config);
RgbImage bim(const Classifier& model, const RgbImage& x, int label, const AttackConfig& config);

nn::Tensor<float> attack(const Classifier& model, const nn::Tensor<float>& images, std::span<const int> labels,
                         const AttackConfig& config);

/// round(v (2^bits - 1)) / (2^bits - 1) per value.
RgbImage bit_depth_reduce(const RgbImage& img, int bits);
nn::Tensor<float> bit_depth_reduce(const nn::Tensor<float>& images, int bits);

/// Per-channel k x k median.
RgbImage median_smooth(const RgbImage& img, int k);
nn::Tensor<float> median_smooth(const nn::Tensor<float>& images, int k);

/// Classifies the reconstruction of x, replicated to three channels.
int scr_defend(const Extractor& extractor, const Decoder& decoder, const Classifier& classifier, const RgbImage& x);

struct Models {
  const Classifier& baseline;
  const Extractor* extractor = nullptr;  // required for the scr defense
  const Decoder* decoder = nullptr;
};

/// Applies a defense to a batch and returns the baseline's predicted labels.
std::vector<int> defended_predictions(const Models& models, const Defense& defense, const nn::Tensor<float>& images);

struct EvalReport {
  std::vector<std::string> attacks;   // first entry is "clean"
  std::vector<std::string> defenses;
  std::vector<std::vector<double>> accuracy;  // [attack][defense]
  int n = 0;
  double epsilon = 0;
  std::uint64_t seed = 0;

  double at(const std::string& attack, const std::string& defense) const;
  std::string table() const;
  /// Header: attack,defense,accuracy,n,epsilon,seed
  std::string csv() const;
};

/// Attacks are generated once per sample against the undefended baseline and
/// then scored under every defense. Throws DomainError on an empty test set.
EvalReport evaluate(const Models& models, const std::vector<AttackConfig>& attacks,
                    const std::vector<Defense>& defenses, const nn::Tensor<float>& images,
                    std::span<const int> labels, std::uint64_t seed);

}  // namespace scr::adversarial
