#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

namespace proxyhpo {

struct UNetSpec {
  int levels = 5;
  int base_channels = 16;
  int res_blocks = 2;
  int in_channels = 1;
  int out_channels = 2;

  void validate() const;
  friend bool operator==(const UNetSpec&, const UNetSpec&) = default;
};

constexpr int kDefaultBaseChannels = 16;
constexpr int kProxyBaseChannels = 4;
constexpr int kProxyResBlocks = 1;

/// The full model: 5 levels, 2 residual blocks per level.
UNetSpec full_spec(int base_channels = kDefaultBaseChannels, int in_channels = 1,
                   int out_channels = 2);

/// Proxy variants at 5, 4 and 3 levels, each with 4 base channels and one
/// residual block per level; I/O channels follow `full`.
std::vector<UNetSpec> proxy_schedule(const UNetSpec& full);

/// Convolution weights + biases of the canonical composition. Level l has
/// base * 2^l channels. Encoder: 3^3 stem, then per level `res_blocks`
/// residual blocks of two 3^3 convs, with a strided 3^3 conv between levels.
/// Decoder (every level but the deepest): 2^3 transposed conv up, 3^3 fuse
/// conv over the concatenated skip, then `res_blocks` residual blocks.
/// Head: 1^3 conv to the output channels. Norm/activation parameters are not counted.
std::int64_t param_count(const UNetSpec& spec);

void to_json(nlohmann::json& j, const UNetSpec& spec);
void from_json(const nlohmann::json& j, UNetSpec& spec);

}  // namespace proxyhpo
