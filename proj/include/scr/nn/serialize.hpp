#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scr/nn/network.hpp"

namespace scr::nn {

inline constexpr char kWeightsMagic[4] = {'S', 'C', 'R', 'W'};
inline constexpr std::uint32_t kWeightsVersion = 1;

/// Layer chain and parameters as stored on disk. The chain carries no input
/// shape, so loading checks it against the caller's network.
struct WeightsFile {
  std::vector<LayerSpec> layers;
  Weights<float> weights;
};

/// "SCRW", u32 version, u32 layer count, then per layer: u8 kind, u8 rank,
/// rank x u32 dims, parameters as little-endian f32 (weights then biases).
/// Momentum buffers are not stored.
std::string encode_weights(const Network& net, const Weights<float>& weights);
WeightsFile decode_weights(const std::string& bytes);

void save_weights(const std::filesystem::path& path, const Network& net, const Weights<float>& weights);
/// Throws StructuralError if the stored chain differs from `net`.
Weights<float> load_weights(const std::filesystem::path& path, const Network& net);

}  // namespace scr::nn
