#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "humot/error.hpp"

namespace humot {

/// Architecture hyperparameters. Defaults give the full-size model.
struct ModelConfig {
  int channels = 128;
  int blocks = 4;
  int heads = 8;
  int latent_size = 128;
  int kernel_size = 3;

  // Encoder embeddings.
  std::vector<int> motion_conv_widths{3, 16, 32, 64};
  std::vector<int> motion_fc_widths{64, 64, 64};
  std::vector<int> encoder_template_widths{16, 32, 64};

  // Decoder embeddings. The last template width must equal `channels`.
  std::vector<int> decoder_template_widths{16, 32, 64, 128};
  int style_width = 128;
  std::vector<int> output_conv_widths{128, 128, 128};
  std::vector<int> output_fc_widths{128, 128, 3};

  int ffn_expansion = 4;
  double positional_base = 10000.0;
  double layer_norm_eps = 1e-6;

  /// Smallest configuration exercising every layer type.
  static ModelConfig tiny() {
    ModelConfig c;
    c.channels = 8;
    c.blocks = 1;
    c.heads = 2;
    c.latent_size = 4;
    c.motion_conv_widths = {3, 4};
    c.motion_fc_widths = {4};
    c.encoder_template_widths = {4};
    c.decoder_template_widths = {4, 8};
    c.style_width = 4;
    c.output_conv_widths = {4};
    c.output_fc_widths = {4, 3};
    c.ffn_expansion = 2;
    return c;
  }

  void validate() const {
    auto positive = [](const std::vector<int>& v) {
      if (v.empty()) return false;
      for (int w : v)
        if (w <= 0) return false;
      return true;
    };
    if (channels <= 0 || blocks <= 0 || heads <= 0 || latent_size <= 0 || style_width <= 0 || ffn_expansion <= 0)
      throw ModelError("model config: widths must be positive");
    if (channels % heads != 0) throw ModelError("model config: channels must be divisible by heads");
    if (channels % 2 != 0) throw ModelError("model config: channels must be even for the positional encoding");
    if (kernel_size <= 0 || kernel_size % 2 == 0) throw ModelError("model config: kernel size must be odd and positive");
    if (!positive(motion_conv_widths) || !positive(motion_fc_widths) || !positive(encoder_template_widths) ||
        !positive(decoder_template_widths) || !positive(output_conv_widths) || !positive(output_fc_widths))
      throw ModelError("model config: every layer needs a positive width");
    if (decoder_template_widths.back() != channels)
      throw ModelError("model config: last decoder template width must equal channels");
    if (output_fc_widths.back() != 3) throw ModelError("model config: output head must end with 3 features");
    if (!(positional_base > 1.0)) throw ModelError("model config: positional base must exceed 1");
  }

  bool operator==(const ModelConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"channels", c.channels},
                     {"blocks", c.blocks},
                     {"heads", c.heads},
                     {"latent_size", c.latent_size},
                     {"kernel_size", c.kernel_size},
                     {"motion_conv_widths", c.motion_conv_widths},
                     {"motion_fc_widths", c.motion_fc_widths},
                     {"encoder_template_widths", c.encoder_template_widths},
                     {"decoder_template_widths", c.decoder_template_widths},
                     {"style_width", c.style_width},
                     {"output_conv_widths", c.output_conv_widths},
                     {"output_fc_widths", c.output_fc_widths},
                     {"ffn_expansion", c.ffn_expansion},
                     {"positional_base", c.positional_base},
                     {"layer_norm_eps", c.layer_norm_eps}};
}

/// Missing keys keep their defaults.
inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("channels", c.channels);
  get("blocks", c.blocks);
  get("heads", c.heads);
  get("latent_size", c.latent_size);
  get("kernel_size", c.kernel_size);
  get("motion_conv_widths", c.motion_conv_widths);
  get("motion_fc_widths", c.motion_fc_widths);
  get("encoder_template_widths", c.encoder_template_widths);
  get("decoder_template_widths", c.decoder_template_widths);
  get("style_width", c.style_width);
  get("output_conv_widths", c.output_conv_widths);
  get("output_fc_widths", c.output_fc_widths);
  get("ffn_expansion", c.ffn_expansion);
  get("positional_base", c.positional_base);
  get("layer_norm_eps", c.layer_norm_eps);
}

}  // namespace humot
