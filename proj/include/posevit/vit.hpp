#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "posevit/distribution.hpp"
#include "posevit/image.hpp"
#include "posevit/tensor.hpp"

namespace posevit {

struct ViTConfig {
  int image_size = 224;
  int patch_height = 16;
  int patch_width = 16;
  int stride_height = 16;
  int stride_width = 16;
  int embed_dim = 256;
  int num_heads = 4;
  int depth = 4;
  int mlp_hidden = 512;
  int num_classes = 16;
  double dropout_block = 0.25;
  double dropout_head = 0.50;
  double layernorm_epsilon = 1e-5;

  int patch_dim() const { return patch_height * patch_width * Image::kChannels; }
  int patch_rows() const { return (image_size - patch_height) / stride_height + 1; }
  int patch_cols() const { return (image_size - patch_width) / stride_width + 1; }
  int num_patches() const { return patch_rows() * patch_cols(); }
  int tokens() const { return num_patches() + 1; }  // class token at index 0
  int head_dim() const { return embed_dim / num_heads; }
};

// Throws ConfigError unless all extents are positive, embed_dim divides
// evenly into heads, dropout rates lie in [0, 1), and the patch grid covers
// the image exactly (stride steps land flush on the far edge).
void validate(const ViTConfig& config);

// Named parameter tensors, iterated in lexicographic name order so
// initialization and optimizer sweeps are deterministic.
struct ModelParams {
  std::map<std::string, Tensor> tensors;

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  ModelParams clone() const;
  void zero_grads() const;
};

// Expected name -> shape table for a config. Per block: pre-attention and
// pre-MLP layernorm gain/bias, fused q/k/v/output projections [D x D]
// (heads are column slices), MLP weights with biases; plus patch embedding,
// class token, position table, final layernorm, and the classifier head.
std::map<std::string, Shape> parameter_shapes(const ViTConfig& config);

// Weights draw from a truncated normal (sigma 0.02, resampled beyond two
// sigma) with a per-tensor substream derived from the seed and tensor name;
// biases, the position table and the class token start at zero and
// layernorm gains at one.
ModelParams init_params(const ViTConfig& config, std::uint64_t seed);

// Same names, same shapes, all values finite; ContractError otherwise.
void validate_params(const ModelParams& params, const ViTConfig& config);

// [H, W, 3] real tensor with samples scaled to [0, 1] (divide by 255).
Tensor image_to_unit_tensor(const Image& image);

// Cuts the scaled image into row-major flattened windows: one row per patch,
// enumerated left to right, then top to bottom. Output is
// [num_patches x patch_dim]. No gradient flows into the image.
Tensor patchify(const Tensor& image_hwc, const ViTConfig& config);

// Projects patches, prepends the class token, and adds the position table:
// row 0 is cls + pos[0], row n is w*x_n + b + pos[n].
Tensor embed(Tape& tape, const Tensor& patches, const ModelParams& params,
             const ViTConfig& config);

// softmax(q k^T / sqrt(d_k)) v for a single head.
Tensor attention(Tape& tape, const Tensor& q, const Tensor& k, const Tensor& v);

// Multi-head self-attention over a token sequence; heads are contiguous
// column slices of the fused projections, concatenated and mixed by w_o.
Tensor mhsa(Tape& tape, const Tensor& tokens, const ModelParams& params,
            int block, const ViTConfig& config);

// Pre-norm residual block: tokens + dropout(mhsa(ln1(tokens))), then
// a GELU MLP with dropout on the hidden and output activations, again
// residual. rng may be null when training is false.
Tensor encoder_block(Tape& tape, const Tensor& tokens, const ModelParams& params,
                     int block, const ViTConfig& config, SplitMix64* rng,
                     bool training);

// Full network up to the classifier logits of the class token: [1 x k].
Tensor forward_logits_from_patches(Tape& tape, const Tensor& patches,
                                   const ModelParams& params,
                                   const ViTConfig& config, SplitMix64* rng,
                                   bool training);
Tensor forward_logits(Tape& tape, const Image& image, const ModelParams& params,
                      const ViTConfig& config, SplitMix64* rng, bool training);

// Inference entry point: softmax over the logits.
ClassDistribution forward(const Image& image, const ModelParams& params,
                          const ViTConfig& config, SplitMix64* rng = nullptr,
                          bool training = false);

}  // namespace posevit
