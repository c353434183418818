#include "posevit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

namespace posevit {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

struct Reader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) {
      throw CheckpointError(CheckpointFault::Truncated,
                            "checkpoint: truncated at byte " + std::to_string(pos));
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
    pos += n;
    return s;
  }
};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params,
                                               const ViTConfig& config) {
  validate_params(params, config);

  std::vector<std::uint8_t> out;
  out.insert(out.end(), std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_u32(out, kCheckpointVersion);
  for (const int field :
       {config.image_size, config.patch_height, config.patch_width,
        config.stride_height, config.stride_width, config.embed_dim,
        config.num_heads, config.depth, config.mlp_hidden, config.num_classes}) {
    put_u32(out, static_cast<std::uint32_t>(field));
  }
  put_f64(out, config.dropout_block);
  put_f64(out, config.dropout_head);

  put_u32(out, static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& [name, tensor] : params.tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
    for (const Index extent : tensor.shape()) {
      put_u64(out, static_cast<std::uint64_t>(extent));
    }
    for (Index i = 0; i < tensor.size(); ++i) put_f64(out, tensor.values()(i));
  }
  put_u32(out, crc_of(out.data(), out.size()));
  return out;
}

std::pair<ModelParams, ViTConfig> deserialize_checkpoint(
    std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 ||
      std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw CheckpointError(CheckpointFault::BadMagic,
                          "checkpoint: magic bytes are not \"PVNT\"");
  }
  Reader r{bytes, 4};
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointFault::BadVersion,
                          "checkpoint: unsupported version " + std::to_string(version));
  }
  if (bytes.size() < r.pos + 4) {
    throw CheckpointError(CheckpointFault::Truncated, "checkpoint: missing CRC");
  }
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) {
    stored |= static_cast<std::uint32_t>(bytes[body + i]) << (8 * i);
  }
  if (crc_of(bytes.data(), body) != stored) {
    throw CheckpointError(CheckpointFault::BadCrc,
                          "checkpoint: CRC mismatch, file is corrupt");
  }

  ViTConfig config;
  config.image_size = static_cast<int>(r.u32());
  config.patch_height = static_cast<int>(r.u32());
  config.patch_width = static_cast<int>(r.u32());
  config.stride_height = static_cast<int>(r.u32());
  config.stride_width = static_cast<int>(r.u32());
  config.embed_dim = static_cast<int>(r.u32());
  config.num_heads = static_cast<int>(r.u32());
  config.depth = static_cast<int>(r.u32());
  config.mlp_hidden = static_cast<int>(r.u32());
  config.num_classes = static_cast<int>(r.u32());
  config.dropout_block = r.f64();
  config.dropout_head = r.f64();
  try {
    validate(config);
  } catch (const ConfigError& e) {
    throw CheckpointError(CheckpointFault::BadShape,
                          std::string("checkpoint: embedded config invalid: ") + e.what());
  }

  ModelParams params;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.str(name_len);
    const std::uint32_t rank = r.u32();
    if (rank > 8) {
      throw CheckpointError(CheckpointFault::BadShape,
                            "checkpoint: implausible rank on " + name);
    }
    Shape shape(rank);
    std::size_t total = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const std::uint64_t extent = r.u64();
      if (extent == 0 || extent > (1ull << 32) || total > (1ull << 32)) {
        throw CheckpointError(CheckpointFault::BadShape,
                              "checkpoint: implausible extent on " + name);
      }
      shape[d] = static_cast<Index>(extent);
      total *= extent;
    }
    ArrayX values(static_cast<Index>(total));
    for (std::size_t v = 0; v < total; ++v) values(static_cast<Index>(v)) = r.f64();
    Tensor tensor;
    try {
      tensor = Tensor::from_array(std::move(shape), std::move(values),
                                  /*requires_grad=*/true);
    } catch (const ContractError& e) {
      throw CheckpointError(CheckpointFault::BadShape,
                            "checkpoint: tensor " + name + ": " + e.what());
    }
    if (!params.tensors.emplace(name, std::move(tensor)).second) {
      throw CheckpointError(CheckpointFault::BadShape,
                            "checkpoint: duplicate tensor " + name);
    }
  }
  if (r.pos != body) {
    throw CheckpointError(CheckpointFault::BadShape,
                          "checkpoint: trailing bytes after tensor table");
  }
  try {
    validate_params(params, config);
  } catch (const ContractError& e) {
    throw CheckpointError(CheckpointFault::BadShape,
                          std::string("checkpoint: ") + e.what());
  }
  return {std::move(params), config};
}

void save_checkpoint(const ModelParams& params, const ViTConfig& config,
                     const std::string& path) {
  const std::vector<std::uint8_t> bytes = serialize_checkpoint(params, config);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("checkpoint: cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("checkpoint: write failed for " + path);
}

std::pair<ModelParams, ViTConfig> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace posevit
