#include "proxyhpo/proxy_net.hpp"

#include "proxyhpo/error.hpp"

namespace proxyhpo {
namespace {

std::int64_t conv(std::int64_t kernel_volume, std::int64_t in, std::int64_t out) {
  return kernel_volume * in * out + out;
}

std::int64_t residual_blocks(int count, std::int64_t channels) {
  return count * 2 * conv(27, channels, channels);
}

}  // namespace

void UNetSpec::validate() const {
  if (levels < 1 || base_channels < 1 || res_blocks < 1 || in_channels < 1 || out_channels < 1) {
    throw Error(ErrorCode::kInvalidInput,
                "network spec fields must all be >= 1 (levels, base_channels, res_blocks, "
                "in_channels, out_channels)");
  }
  if (levels > 16) throw Error(ErrorCode::kInvalidInput, "at most 16 levels supported");
}

UNetSpec full_spec(int base_channels, int in_channels, int out_channels) {
  UNetSpec spec{5, base_channels, 2, in_channels, out_channels};
  spec.validate();
  return spec;
}

std::vector<UNetSpec> proxy_schedule(const UNetSpec& full) {
  full.validate();
  if (full.levels < 3) {
    throw Error(ErrorCode::kSchedule, "proxy schedule needs a full model with >= 3 levels");
  }
  std::vector<UNetSpec> out;
  for (int levels : {5, 4, 3}) {
    out.push_back({levels, kProxyBaseChannels, kProxyResBlocks, full.in_channels,
                   full.out_channels});
  }
  return out;
}

std::int64_t param_count(const UNetSpec& spec) {
  spec.validate();
  std::vector<std::int64_t> ch(static_cast<std::size_t>(spec.levels));
  for (int l = 0; l < spec.levels; ++l) {
    ch[static_cast<std::size_t>(l)] = static_cast<std::int64_t>(spec.base_channels) << l;
  }
  std::int64_t total = conv(27, spec.in_channels, ch[0]);
  for (std::size_t l = 0; l < ch.size(); ++l) {
    total += residual_blocks(spec.res_blocks, ch[l]);
    if (l + 1 < ch.size()) {
      total += conv(27, ch[l], ch[l + 1]);      // downsample
      total += conv(8, ch[l + 1], ch[l]);       // transposed upsample
      total += conv(27, 2 * ch[l], ch[l]);      // fuse skip
      total += residual_blocks(spec.res_blocks, ch[l]);
    }
  }
  total += conv(1, ch[0], spec.out_channels);
  return total;
}

void to_json(nlohmann::json& j, const UNetSpec& spec) {
  j = nlohmann::json{{"levels", spec.levels},
                     {"base_channels", spec.base_channels},
                     {"res_blocks", spec.res_blocks},
                     {"in_channels", spec.in_channels},
                     {"out_channels", spec.out_channels}};
}

void from_json(const nlohmann::json& j, UNetSpec& spec) {
  spec.levels = j.at("levels").get<int>();
  spec.base_channels = j.at("base_channels").get<int>();
  spec.res_blocks = j.at("res_blocks").get<int>();
  spec.in_channels = j.at("in_channels").get<int>();
  spec.out_channels = j.at("out_channels").get<int>();
}

}  // namespace proxyhpo
