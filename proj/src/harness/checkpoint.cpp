#include "ddavs/harness/checkpoint.hpp"

#include "../io/bytes.hpp"
#include "ddavs/error.hpp"

namespace ddavs::harness {

namespace {
constexpr std::string_view kMagic = "DAVC";
}

Checkpoint snapshot(const model::ParamStore& params, std::uint64_t step, std::string config_json) {
  Checkpoint c;
  c.step = step;
  c.config_json = std::move(config_json);
  for (const auto& [name, p] : params.all()) c.tensors.emplace(name, p.value);
  return c;
}

void restore(const Checkpoint& ckpt, model::ParamStore& params) {
  if (ckpt.tensors.size() != params.all().size()) {
    throw ParameterError("checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                         " tensors, model has " + std::to_string(params.all().size()));
  }
  for (auto& [name, p] : params.all()) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) throw ParameterError("checkpoint lacks tensor '" + name + "'");
    if (it->second.shape() != p.value.shape()) {
      throw DimensionError("checkpoint tensor '" + name + "' is " + nd::shape_str(it->second.shape()) +
                           ", model expects " + nd::shape_str(p.value.shape()));
    }
    p.value = it->second;
  }
}

std::size_t save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  io::ByteWriter w;
  w.bytes(kMagic);
  w.u32(ckpt.version);
  w.u64(ckpt.step);
  w.str(ckpt.config_json);
  w.u64(ckpt.tensors.size());
  for (const auto& [name, t] : ckpt.tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.shape().size()));
    for (std::size_t d : t.shape()) w.u64(d);
    for (double v : t.values()) w.f64(v);
  }
  return w.save(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  io::ByteReader r = io::ByteReader::from_file(path);
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw DecodeError(DecodeError::Kind::BadMagic, path.string() + ": not a DAVC checkpoint");
  }
  Checkpoint c;
  c.version = r.u32();
  if (c.version != kCheckpointVersion) {
    throw DecodeError(DecodeError::Kind::VersionMismatch,
                      path.string() + ": checkpoint format version " + std::to_string(c.version) +
                          ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  c.step = r.u64();
  c.config_json = r.str();
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const std::uint32_t ndim = r.u32();
    if (ndim == 0 || ndim > 8) {
      throw DecodeError(DecodeError::Kind::Malformed, path.string() + ": tensor '" + name +
                                                          "' has " + std::to_string(ndim) + " dims");
    }
    nd::Shape shape(ndim);
    for (auto& d : shape) d = r.u64();
    const std::size_t n = nd::shape_size(shape);
    if (n > r.remaining() / sizeof(double)) {
      throw DecodeError(DecodeError::Kind::Truncated,
                        path.string() + ": tensor '" + name + "' runs past the end of the file");
    }
    std::vector<double> values(n);
    for (double& v : values) v = r.f64();
    c.tensors.emplace(std::move(name), nd::Array(std::move(shape), std::move(values)));
  }
  if (r.remaining() != 0) {
    throw DecodeError(DecodeError::Kind::Malformed,
                      path.string() + ": " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return c;
}

}  // namespace ddavs::harness
