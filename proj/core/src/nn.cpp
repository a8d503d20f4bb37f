#include "colgrade/nn.hpp"

#include <cstring>

#include "bytes.hpp"

namespace colgrade::nn {

namespace {

std::unique_ptr<Layer<float>> make_layer(std::uint32_t kind,
                                         const std::vector<std::uint32_t>& m) {
  auto need = [&](std::size_t n) {
    if (m.size() != n) throw FormatError("QNET1: bad layer metadata");
  };
  switch (kind) {
    case kConv3d:
      need(5);
      return std::make_unique<Conv3d<float>>(m[0], m[1], m[2], m[3], m[4]);
    case kTConv3d:
      need(5);
      return std::make_unique<TConv3d<float>>(m[0], m[1], m[2], m[3], m[4]);
    case kDense:
      need(2);
      return std::make_unique<Dense<float>>(m[0], m[1]);
    case kFlatten:
      need(0);
      return std::make_unique<Flatten<float>>();
    case kTanh:
      need(0);
      return std::make_unique<Tanh<float>>();
    case kSigmoid:
      need(0);
      return std::make_unique<Sigmoid<float>>();
    case kSoftmax:
      need(0);
      return std::make_unique<Softmax<float>>();
    default:
      throw FormatError("QNET1: unknown layer kind");
  }
}

}  // namespace

std::string network_to_bytes(const Network<float>& net) {
  std::string buf;
  buf.append("QNET1");
  bytes::put_u32(buf, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    bytes::put_u32(buf, l->kind());
    const auto meta = l->meta();
    bytes::put_u32(buf, static_cast<std::uint32_t>(meta.size()));
    for (std::uint32_t v : meta) bytes::put_u32(buf, v);

    std::vector<std::vector<float>*> p, g;
    const_cast<Layer<float>&>(*l).collect(p, g);
    bytes::put_u32(buf, static_cast<std::uint32_t>(p.size()));
    for (const auto* blob : p) {
      bytes::put_u64(buf, blob->size());
      for (float v : *blob) bytes::put_f32(buf, v);
    }
  }
  return buf;
}

Network<float> network_from_bytes(const std::string& bytes_in,
                                  std::size_t& off) {
  bytes::Reader r(bytes_in.data() + off, bytes_in.size() - off, "QNET1");
  char magic[5];
  r.raw(magic, 5);
  if (std::memcmp(magic, "QNET1", 5) != 0)
    throw FormatError("QNET1: bad magic");

  Network<float> net;
  const std::uint32_t n_layers = r.u32();
  if (n_layers > 1024) throw FormatError("QNET1: implausible layer count");
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const std::uint32_t kind = r.u32();
    const std::uint32_t n_meta = r.u32();
    if (n_meta > 64) throw FormatError("QNET1: implausible metadata");
    std::vector<std::uint32_t> meta(n_meta);
    for (auto& v : meta) v = r.u32();
    auto layer = make_layer(kind, meta);

    std::vector<std::vector<float>*> p, g;
    layer->collect(p, g);
    const std::uint32_t n_blobs = r.u32();
    if (n_blobs != p.size()) throw FormatError("QNET1: parameter count mismatch");
    for (auto* blob : p) {
      const std::uint64_t n = r.u64();
      if (n != blob->size()) throw FormatError("QNET1: parameter size mismatch");
      for (auto& v : *blob) v = r.f32();
    }
    net.add_layer(std::move(layer));
  }
  off += r.position();
  return net;
}

void save_network(const Network<float>& net, const std::string& path) {
  bytes::write_file(path, network_to_bytes(net), "QNET1");
}

Network<float> load_network(const std::string& path) {
  const std::string buf = bytes::read_file(path, "QNET1");
  std::size_t off = 0;
  auto net = network_from_bytes(buf, off);
  if (off != buf.size()) throw FormatError("QNET1: trailing bytes");
  return net;
}

}  // namespace colgrade::nn
