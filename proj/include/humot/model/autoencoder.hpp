#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "humot/model/config.hpp"
#include "humot/model/layers.hpp"
#include "humot/skeleton.hpp"

namespace humot {

/// Skeleton-agnostic motion representation, Z x F.
struct LatentCode {
  nn::Matrix<double> values;

  int size() const { return static_cast<int>(values.rows()); }
  int frame_count() const { return static_cast<int>(values.cols()); }
};

/// Motion as a token matrix: row j*F + f holds joint j at frame f.
template <typename T>
nn::Matrix<T> motion_tokens(const MotionSequence& seq) {
  const int J = seq.joint_count();
  const int F = seq.frame_count();
  nn::Matrix<T> m(static_cast<Eigen::Index>(J) * F, 3);
  for (int j = 0; j < J; ++j)
    for (int f = 0; f < F; ++f)
      for (int a = 0; a < 3; ++a) m(j * F + f, a) = static_cast<T>(seq.at(j, a, f));
  return m;
}

template <typename T>
MotionSequence motion_from_tokens(const nn::Matrix<T>& tokens, const SkeletonTopology& topo, int frames,
                                  double framerate) {
  const int J = topo.joint_count();
  if (tokens.rows() != static_cast<Eigen::Index>(J) * frames || tokens.cols() != 3)
    throw ModelError("token matrix does not match J x F");
  MotionSequence seq(topo, frames, framerate);
  for (int j = 0; j < J; ++j)
    for (int f = 0; f < frames; ++f)
      for (int a = 0; a < 3; ++a) seq.at(j, a, f) = static_cast<double>(tokens(j * frames + f, a));
  return seq;
}

template <typename T>
nn::Matrix<T> template_matrix(const SkeletonTemplate& t) {
  return t.positions.template cast<T>();
}

/// Template-conditioned transformer autoencoder. The encoder maps a motion
/// over any skeleton to a Z x F latent; the decoder maps a latent back to
/// positions over the joints of any template.
template <typename T>
class MotionAutoencoder {
 public:
  explicit MotionAutoencoder(ModelConfig config, std::uint64_t seed = 0) : config_(std::move(config)) {
    config_.validate();
    build(seed);
  }

  const ModelConfig& config() const { return config_; }
  nn::ParameterSet<T>& parameters() { return params_; }
  const nn::ParameterSet<T>& parameters() const { return params_; }

  const XcaBlock& encoder_block(int i) const { return encoder_blocks_.at(i); }
  const XcaBlock& decoder_block(int i) const { return decoder_blocks_.at(i); }
  int latent_token_id() const { return latent_token_; }
  int output_layer_bias_id() const { return output_fc_.back().bias; }
  int output_layer_weight_id() const { return output_fc_.back().weight; }

  /// motion: (J*F x 3) tokens, skeleton: (J x 3). Returns the latent as (F x Z).
  nn::Var<T> encode(const nn::ForwardContext<T>& ctx, const nn::Matrix<T>& motion, const nn::Matrix<T>& skeleton,
                    int frames) const {
    const Eigen::Index J = skeleton.rows();
    if (skeleton.cols() != 3 || motion.cols() != 3) throw ModelError("encode: positions must have 3 coordinates");
    if (frames < 1 || motion.rows() != J * frames)
      throw ModelError("encode: motion has " + std::to_string(motion.rows() / std::max(frames, 1)) +
                       " joints but the template has " + std::to_string(J));
    auto m = ctx.input(motion);
    for (const auto& conv : motion_conv_) m = conv(ctx, m, frames);
    for (const auto& fc : motion_fc_) m = fc(ctx, m);
    auto t = ctx.input(skeleton);
    for (const auto& fc : encoder_template_) t = fc(ctx, t);
    t = nn::repeat_rows(t, frames);
    auto h = merge_(ctx, nn::concat_cols(m, t));
    h = nn::add_tiled(h, ctx.input(positional_encoding(frames)));
    h = nn::append_rows(h, nn::repeat_rows(ctx(latent_token_), frames));
    const int grid_rows = static_cast<int>(J) + 1;
    for (const auto& block : encoder_blocks_) h = block(ctx, h, grid_rows, frames);
    return encoder_out_(ctx, nn::slice_rows(h, J * frames, frames));
  }

  /// latent: (F x Z), skeleton: (J x 3). Returns (J*F x 3) positions.
  nn::Var<T> decode(const nn::ForwardContext<T>& ctx, const nn::Var<T>& latent, const nn::Matrix<T>& skeleton) const {
    const int frames = static_cast<int>(latent.rows());
    if (latent.cols() != config_.latent_size)
      throw ModelError("decode: latent size " + std::to_string(latent.cols()) + " differs from configured " +
                       std::to_string(config_.latent_size));
    if (skeleton.cols() != 3 || skeleton.rows() < 1) throw ModelError("decode: template must be J x 3");
    const int J = static_cast<int>(skeleton.rows());
    auto t = ctx.input(skeleton);
    for (const auto& fc : decoder_template_) t = fc(ctx, t);
    auto h = nn::add_tiled(nn::repeat_rows(t, frames), ctx.input(positional_encoding(frames)));

    auto trunk = latent;
    for (const auto& conv : style_shared_) trunk = conv(ctx, trunk, frames);
    for (std::size_t b = 0; b < decoder_blocks_.size(); ++b) {
      const StyleHead& s = style_heads_[b];
      auto style = s.conv(ctx, trunk, frames);
      style = s.fc(ctx, style);
      style = s.mlp_hidden(ctx, style);
      style = s.mlp_out(ctx, style);
      h = nn::mul_tiled(h, style);
      h = decoder_blocks_[b](ctx, h, J, frames);
    }
    for (const auto& conv : output_conv_) h = conv(ctx, h, frames);
    for (const auto& fc : output_fc_) h = fc(ctx, h);
    return h;
  }

  nn::Matrix<T> positional_encoding(int frames) const {
    return temporal_positional_encoding<T>(frames, config_.channels, config_.positional_base);
  }

 private:
  struct StyleHead {
    TemporalConvLayer conv;
    DenseLayer fc;
    DenseLayer mlp_hidden;
    DenseLayer mlp_out;
  };

  void build(std::uint64_t seed) {
    Rng rng(derive_seed(seed, {0x1417}));
    const ModelConfig& c = config_;
    const int k = c.kernel_size;

    int width = 3;
    for (std::size_t i = 0; i < c.motion_conv_widths.size(); ++i) {
      motion_conv_.push_back(TemporalConvLayer::create(params_, rng, "encoder.motion.conv" + std::to_string(i), width,
                                                       c.motion_conv_widths[i], k, Activation::kElu));
      width = c.motion_conv_widths[i];
    }
    for (std::size_t i = 0; i < c.motion_fc_widths.size(); ++i) {
      motion_fc_.push_back(DenseLayer::create(params_, rng, "encoder.motion.fc" + std::to_string(i), width,
                                              c.motion_fc_widths[i], Activation::kElu));
      width = c.motion_fc_widths[i];
    }
    const int motion_width = width;
    width = 3;
    for (std::size_t i = 0; i < c.encoder_template_widths.size(); ++i) {
      encoder_template_.push_back(DenseLayer::create(params_, rng, "encoder.template.fc" + std::to_string(i), width,
                                                     c.encoder_template_widths[i], Activation::kElu));
      width = c.encoder_template_widths[i];
    }
    merge_ = DenseLayer::create(params_, rng, "encoder.merge", motion_width + width, c.channels, Activation::kNone);
    {
      nn::Matrix<T> token(1, c.channels);
      for (int i = 0; i < c.channels; ++i) token(0, i) = static_cast<T>(0.02 * rng.normal());
      latent_token_ = params_.add("encoder.latent_token", std::move(token));
    }
    for (int b = 0; b < c.blocks; ++b)
      encoder_blocks_.push_back(XcaBlock::create(params_, rng, "encoder.block" + std::to_string(b), c.channels, c.heads,
                                                 c.ffn_expansion, c.layer_norm_eps));
    encoder_out_ = DenseLayer::create(params_, rng, "encoder.out", c.channels, c.latent_size, Activation::kNone);

    width = 3;
    for (std::size_t i = 0; i < c.decoder_template_widths.size(); ++i) {
      const bool last = i + 1 == c.decoder_template_widths.size();
      decoder_template_.push_back(DenseLayer::create(params_, rng, "decoder.template.fc" + std::to_string(i), width,
                                                     c.decoder_template_widths[i],
                                                     last ? Activation::kNone : Activation::kRelu));
      width = c.decoder_template_widths[i];
    }
    // Style modules: two shared temporal convolutions, then per block one
    // convolution, one linear layer and a two-layer MLP. The last layer's
    // bias starts at 1 so modulation starts near identity.
    style_shared_.push_back(TemporalConvLayer::create(params_, rng, "decoder.style.shared0", c.latent_size,
                                                      c.style_width, k, Activation::kElu));
    style_shared_.push_back(TemporalConvLayer::create(params_, rng, "decoder.style.shared1", c.style_width,
                                                      c.style_width, k, Activation::kElu));
    for (int b = 0; b < c.blocks; ++b) {
      const std::string p = "decoder.style.block" + std::to_string(b);
      StyleHead s;
      s.conv = TemporalConvLayer::create(params_, rng, p + ".conv", c.style_width, c.style_width, k, Activation::kElu);
      s.fc = DenseLayer::create(params_, rng, p + ".fc", c.style_width, c.style_width, Activation::kElu);
      s.mlp_hidden = DenseLayer::create(params_, rng, p + ".mlp0", c.style_width, c.style_width, Activation::kRelu);
      s.mlp_out = DenseLayer::create(params_, rng, p + ".mlp1", c.style_width, c.channels, Activation::kNone, 1.0);
      style_heads_.push_back(s);
      decoder_blocks_.push_back(XcaBlock::create(params_, rng, "decoder.block" + std::to_string(b), c.channels, c.heads,
                                                 c.ffn_expansion, c.layer_norm_eps));
    }
    width = c.channels;
    for (std::size_t i = 0; i < c.output_conv_widths.size(); ++i) {
      output_conv_.push_back(TemporalConvLayer::create(params_, rng, "decoder.output.conv" + std::to_string(i), width,
                                                       c.output_conv_widths[i], k, Activation::kElu));
      width = c.output_conv_widths[i];
    }
    for (std::size_t i = 0; i < c.output_fc_widths.size(); ++i) {
      const bool last = i + 1 == c.output_fc_widths.size();
      output_fc_.push_back(DenseLayer::create(params_, rng, "decoder.output.fc" + std::to_string(i), width,
                                              c.output_fc_widths[i], last ? Activation::kNone : Activation::kElu));
      width = c.output_fc_widths[i];
    }
  }

  ModelConfig config_;
  nn::ParameterSet<T> params_;
  std::vector<TemporalConvLayer> motion_conv_;
  std::vector<DenseLayer> motion_fc_;
  std::vector<DenseLayer> encoder_template_;
  DenseLayer merge_;
  int latent_token_ = -1;
  std::vector<XcaBlock> encoder_blocks_;
  DenseLayer encoder_out_;
  std::vector<DenseLayer> decoder_template_;
  std::vector<TemporalConvLayer> style_shared_;
  std::vector<StyleHead> style_heads_;
  std::vector<XcaBlock> decoder_blocks_;
  std::vector<TemporalConvLayer> output_conv_;
  std::vector<DenseLayer> output_fc_;
};

// ---------------------------------------------------------------------------
// Motion-level entry points (inference).

template <typename T>
LatentCode encode(const MotionSequence& seq, const SkeletonTemplate& skeleton, const MotionAutoencoder<T>& model) {
  if (seq.joint_count() != skeleton.joint_count())
    throw ModelError("encode: sequence has " + std::to_string(seq.joint_count()) + " joints, template has " +
                     std::to_string(skeleton.joint_count()));
  if (!seq.topology().same_structure(skeleton.topology))
    throw ModelError("encode: sequence and template joint orders differ");
  nn::ForwardContext<T> ctx(model.parameters());
  auto z = model.encode(ctx, motion_tokens<T>(seq), template_matrix<T>(skeleton), seq.frame_count());
  return LatentCode{z.value().transpose().template cast<double>()};
}

template <typename T>
MotionSequence decode(const LatentCode& z, const SkeletonTemplate& skeleton, const MotionAutoencoder<T>& model,
                      double framerate = 30.0) {
  if (!z.values.allFinite()) throw ModelError("decode: latent code is not finite");
  if (z.frame_count() < 1) throw ModelError("decode: latent code has no frames");
  nn::ForwardContext<T> ctx(model.parameters());
  auto latent = ctx.input(z.values.transpose().template cast<T>());
  auto out = model.decode(ctx, latent, template_matrix<T>(skeleton));
  return motion_from_tokens(out.value(), skeleton.topology, z.frame_count(), framerate);
}

/// decode(encode(seq | skeleton) | skeleton).
template <typename T>
MotionSequence reconstruct(const MotionSequence& seq, const SkeletonTemplate& skeleton, const MotionAutoencoder<T>& model) {
  return decode(encode(seq, skeleton, model), skeleton, model, seq.framerate());
}

template <typename T>
std::int64_t parameter_count(const MotionAutoencoder<T>& model) {
  return model.parameters().scalar_count();
}

/// Learnable parameter count of the reference implementation.
inline constexpr std::int64_t kReferenceParameterCount = 2'475'511;

}  // namespace humot
