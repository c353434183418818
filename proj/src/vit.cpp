#include "posevit/vit.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace posevit {

namespace {

constexpr double kInitSigma = 0.02;
constexpr double kInitBound = 0.04;  // two sigma

bool is_weight_name(const std::string& name) {
  const auto ends_with = [&](const char* suffix) {
    const std::string s(suffix);
    return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
  };
  return ends_with(".w") || ends_with(".wq") || ends_with(".wk") ||
         ends_with(".wv") || ends_with(".wo") || ends_with(".w1") || ends_with(".w2");
}

std::string block_prefix(int block) { return "block" + std::to_string(block) + "."; }

}  // namespace

void validate(const ViTConfig& c) {
  if (c.image_size <= 0 || c.patch_height <= 0 || c.patch_width <= 0 ||
      c.stride_height <= 0 || c.stride_width <= 0 || c.embed_dim <= 0 ||
      c.num_heads <= 0 || c.depth <= 0 || c.mlp_hidden <= 0 || c.num_classes <= 0) {
    throw ConfigError("vit config: extents must be positive");
  }
  if (c.patch_height > c.image_size || c.patch_width > c.image_size) {
    throw ConfigError("vit config: patch exceeds image");
  }
  if ((c.image_size - c.patch_height) % c.stride_height != 0 ||
      (c.image_size - c.patch_width) % c.stride_width != 0) {
    throw ConfigError("vit config: patch grid does not cover the image");
  }
  if (c.embed_dim % c.num_heads != 0) {
    throw ConfigError("vit config: embed_dim must divide evenly across heads");
  }
  if (c.dropout_block < 0.0 || c.dropout_block >= 1.0 || c.dropout_head < 0.0 ||
      c.dropout_head >= 1.0) {
    throw ConfigError("vit config: dropout rates must lie in [0, 1)");
  }
  if (c.layernorm_epsilon <= 0.0) {
    throw ConfigError("vit config: layernorm epsilon must be positive");
  }
}

Tensor& ModelParams::at(const std::string& name) {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw ContractError("params: missing tensor " + name);
  return it->second;
}

const Tensor& ModelParams::at(const std::string& name) const {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw ContractError("params: missing tensor " + name);
  return it->second;
}

ModelParams ModelParams::clone() const {
  ModelParams copy;
  for (const auto& [name, tensor] : tensors) copy.tensors.emplace(name, tensor.clone());
  return copy;
}

void ModelParams::zero_grads() const {
  for (const auto& [name, tensor] : tensors) tensor.zero_grad();
}

std::map<std::string, Shape> parameter_shapes(const ViTConfig& c) {
  validate(c);
  const Index d = c.embed_dim;
  const Index hidden = c.mlp_hidden;
  std::map<std::string, Shape> shapes;
  shapes["embed.w"] = {c.patch_dim(), d};
  shapes["embed.b"] = {d};
  shapes["embed.cls"] = {d};
  shapes["embed.pos"] = {c.tokens(), d};
  for (int i = 0; i < c.depth; ++i) {
    const std::string p = block_prefix(i);
    shapes[p + "ln1.gain"] = {d};
    shapes[p + "ln1.bias"] = {d};
    shapes[p + "attn.wq"] = {d, d};
    shapes[p + "attn.wk"] = {d, d};
    shapes[p + "attn.wv"] = {d, d};
    shapes[p + "attn.wo"] = {d, d};
    shapes[p + "ln2.gain"] = {d};
    shapes[p + "ln2.bias"] = {d};
    shapes[p + "mlp.w1"] = {d, hidden};
    shapes[p + "mlp.b1"] = {hidden};
    shapes[p + "mlp.w2"] = {hidden, d};
    shapes[p + "mlp.b2"] = {d};
  }
  shapes["final_ln.gain"] = {d};
  shapes["final_ln.bias"] = {d};
  shapes["head.w"] = {d, c.num_classes};
  shapes["head.b"] = {c.num_classes};
  return shapes;
}

ModelParams init_params(const ViTConfig& config, std::uint64_t seed) {
  ModelParams params;
  for (const auto& [name, shape] : parameter_shapes(config)) {
    Tensor t = Tensor::zeros(shape, /*requires_grad=*/true);
    if (is_weight_name(name)) {
      SplitMix64 rng(mix_seed(seed, fnv1a64(name)));
      for (Index i = 0; i < t.size(); ++i) {
        t.values()(i) = rng.next_truncated_normal(kInitSigma, kInitBound);
      }
    } else if (name.ends_with(".gain")) {
      t.values().setOnes();
    }
    params.tensors.emplace(name, std::move(t));
  }
  return params;
}

void validate_params(const ModelParams& params, const ViTConfig& config) {
  const auto expected = parameter_shapes(config);
  if (params.tensors.size() != expected.size()) {
    throw ContractError("params: tensor count does not match config");
  }
  for (const auto& [name, shape] : expected) {
    const auto it = params.tensors.find(name);
    if (it == params.tensors.end()) {
      throw ContractError("params: missing tensor " + name);
    }
    if (it->second.shape() != shape) {
      throw ContractError("params: shape mismatch on " + name);
    }
    if (!it->second.values().allFinite()) {
      throw ContractError("params: non-finite values in " + name);
    }
  }
}

Tensor image_to_unit_tensor(const Image& image) {
  validate(image);
  ArrayX values(static_cast<Index>(image.pixels.size()));
  for (Index i = 0; i < values.size(); ++i) {
    values(i) = image.pixels[static_cast<std::size_t>(i)] / 255.0;
  }
  return Tensor::from_array({image.height, image.width, Image::kChannels},
                            std::move(values));
}

Tensor patchify(const Tensor& image_hwc, const ViTConfig& config) {
  validate(config);
  if (image_hwc.rank() != 3 || image_hwc.shape()[0] != config.image_size ||
      image_hwc.shape()[1] != config.image_size ||
      image_hwc.shape()[2] != Image::kChannels) {
    throw ContractError("patchify: image tensor does not match configured geometry");
  }
  const Index rows = config.patch_rows();
  const Index cols = config.patch_cols();
  const Index patch_w = config.patch_width;
  const Index patch_h = config.patch_height;
  const Index dim = config.patch_dim();
  const Index img_w = config.image_size;
  const ArrayX& src = image_hwc.values();

  ArrayX out(rows * cols * dim);
  const Index row_span = patch_w * Image::kChannels;
  Index write = 0;
  for (Index wy = 0; wy < rows; ++wy) {
    for (Index wx = 0; wx < cols; ++wx) {
      const Index y0 = wy * config.stride_height;
      const Index x0 = wx * config.stride_width;
      for (Index yy = 0; yy < patch_h; ++yy) {
        const Index src_at = ((y0 + yy) * img_w + x0) * Image::kChannels;
        out.segment(write, row_span) = src.segment(src_at, row_span);
        write += row_span;
      }
    }
  }
  return Tensor::from_array({rows * cols, dim}, std::move(out));
}

Tensor embed(Tape& tape, const Tensor& patches, const ModelParams& params,
             const ViTConfig& config) {
  if (patches.rank() != 2 || patches.rows() != config.num_patches() ||
      patches.cols() != config.patch_dim()) {
    throw ContractError("embed: patch matrix does not match configured geometry");
  }
  const Tensor body =
      add_rowvec(tape, matmul(tape, patches, params.at("embed.w")), params.at("embed.b"));
  const Tensor cls_row = as_row(tape, params.at("embed.cls"));
  const std::vector<Tensor> parts{cls_row, body};
  const Tensor sequence = concat_rows(tape, parts);
  return add(tape, sequence, params.at("embed.pos"));
}

Tensor attention(Tape& tape, const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) {
    throw ContractError("attention: rank-2 tensors required");
  }
  if (q.cols() != k.cols() || k.rows() != v.rows()) {
    throw ContractError("attention: query/key/value extents disagree");
  }
  const Scalar inv_sqrt_dk = 1.0 / std::sqrt(static_cast<Scalar>(q.cols()));
  const Tensor scores = scale(tape, matmul(tape, q, transpose(tape, k)), inv_sqrt_dk);
  return matmul(tape, softmax(tape, scores), v);
}

Tensor mhsa(Tape& tape, const Tensor& tokens, const ModelParams& params,
            int block, const ViTConfig& config) {
  const std::string p = block_prefix(block);
  const Tensor q = matmul(tape, tokens, params.at(p + "attn.wq"));
  const Tensor k = matmul(tape, tokens, params.at(p + "attn.wk"));
  const Tensor v = matmul(tape, tokens, params.at(p + "attn.wv"));

  const Index dk = config.head_dim();
  std::vector<Tensor> heads;
  heads.reserve(config.num_heads);
  for (int h = 0; h < config.num_heads; ++h) {
    const Index first = h * dk;
    heads.push_back(attention(tape, slice_cols(tape, q, first, dk),
                              slice_cols(tape, k, first, dk),
                              slice_cols(tape, v, first, dk)));
  }
  return matmul(tape, concat_cols(tape, heads), params.at(p + "attn.wo"));
}

Tensor encoder_block(Tape& tape, const Tensor& tokens, const ModelParams& params,
                     int block, const ViTConfig& config, SplitMix64* rng,
                     bool training) {
  if (training && rng == nullptr) {
    throw ContractError("encoder_block: training forward needs an rng for dropout");
  }
  const std::string p = block_prefix(block);
  const Scalar eps = config.layernorm_epsilon;
  SplitMix64 unused(0);
  SplitMix64& gen = rng != nullptr ? *rng : unused;

  Tensor attended = mhsa(
      tape, layernorm(tape, tokens, params.at(p + "ln1.gain"), params.at(p + "ln1.bias"), eps),
      params, block, config);
  attended = dropout(tape, attended, config.dropout_block, training, gen);
  const Tensor residual = add(tape, attended, tokens);

  Tensor hidden = add_rowvec(
      tape,
      matmul(tape,
             layernorm(tape, residual, params.at(p + "ln2.gain"), params.at(p + "ln2.bias"), eps),
             params.at(p + "mlp.w1")),
      params.at(p + "mlp.b1"));
  hidden = dropout(tape, gelu(tape, hidden), config.dropout_block, training, gen);
  Tensor projected =
      add_rowvec(tape, matmul(tape, hidden, params.at(p + "mlp.w2")), params.at(p + "mlp.b2"));
  projected = dropout(tape, projected, config.dropout_block, training, gen);
  return add(tape, projected, residual);
}

Tensor forward_logits_from_patches(Tape& tape, const Tensor& patches,
                                   const ModelParams& params,
                                   const ViTConfig& config, SplitMix64* rng,
                                   bool training) {
  if (training && rng == nullptr) {
    throw ContractError("forward: training forward needs an rng for dropout");
  }
  Tensor tokens = embed(tape, patches, params, config);
  for (int b = 0; b < config.depth; ++b) {
    tokens = encoder_block(tape, tokens, params, b, config, rng, training);
  }
  tokens = layernorm(tape, tokens, params.at("final_ln.gain"),
                     params.at("final_ln.bias"), config.layernorm_epsilon);
  Tensor cls = row(tape, tokens, 0);
  SplitMix64 unused(0);
  cls = dropout(tape, cls, config.dropout_head, training,
                rng != nullptr ? *rng : unused);
  return add_rowvec(tape, matmul(tape, cls, params.at("head.w")), params.at("head.b"));
}

Tensor forward_logits(Tape& tape, const Image& image, const ModelParams& params,
                      const ViTConfig& config, SplitMix64* rng, bool training) {
  return forward_logits_from_patches(
      tape, patchify(image_to_unit_tensor(image), config), params, config, rng, training);
}

ClassDistribution forward(const Image& image, const ModelParams& params,
                          const ViTConfig& config, SplitMix64* rng, bool training) {
  validate_params(params, config);
  Tape tape;
  const Tensor logits = forward_logits(tape, image, params, config, rng, training);
  const Tensor probabilities = softmax(tape, logits);
  std::vector<double> values(probabilities.values().data(),
                             probabilities.values().data() + probabilities.size());
  return ClassDistribution::from_probabilities(std::move(values));
}

}  // namespace posevit
