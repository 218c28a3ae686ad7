#include "convnorm/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

#include "convnorm/error.hpp"

namespace convnorm {

namespace fs = std::filesystem;
using json = nlohmann::json;

static_assert(sizeof(double) == 8 && sizeof(float) == 4);

namespace {

constexpr char kMagic[4] = {'C', 'N', 'R', 'M'};
constexpr std::size_t kFixedHeader = 8;

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

template <typename U>
U get_le(const std::uint8_t* p) {
  U v = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) v |= static_cast<U>(p[b]) << (8 * b);
  return v;
}

std::size_t dtype_size(DType d) { return d == DType::Float64 ? 8 : 4; }

}  // namespace

std::size_t Tensor::element_count() const noexcept {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_blob(const Tensor& tensor) {
  if (tensor.dims.size() > 255) throw Error(ErrorCode::InvalidArgument, "too many dimensions");
  if (tensor.values.size() != tensor.element_count()) {
    throw Error(ErrorCode::ShapeMismatch, "tensor dims do not match its value count");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kFixedHeader + 4 * tensor.dims.size() +
              tensor.values.size() * dtype_size(tensor.dtype));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le<std::uint16_t>(out, kBlobVersion);
  out.push_back(static_cast<std::uint8_t>(tensor.dtype));
  out.push_back(static_cast<std::uint8_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put_le<std::uint32_t>(out, d);
  for (double v : tensor.values) {
    if (tensor.dtype == DType::Float64) {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    } else {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  return out;
}

Tensor decode_blob(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "not a CNRM tensor blob");
  }
  if (bytes.size() < kFixedHeader) throw Error(ErrorCode::TruncatedPayload, "header cut short");
  const auto version = get_le<std::uint16_t>(bytes.data() + 4);
  if (version != kBlobVersion) {
    throw Error(ErrorCode::BadVersion, "blob version " + std::to_string(version) +
                                           ", expected " + std::to_string(kBlobVersion));
  }
  const std::uint8_t dtype = bytes[6];
  if (dtype > 1) throw Error(ErrorCode::UnsupportedDtype, "dtype code " + std::to_string(dtype));

  Tensor t;
  t.dtype = static_cast<DType>(dtype);
  const std::size_t ndim = bytes[7];
  if (bytes.size() < kFixedHeader + 4 * ndim) {
    throw Error(ErrorCode::TruncatedPayload, "dims cut short");
  }
  for (std::size_t d = 0; d < ndim; ++d) {
    t.dims.push_back(get_le<std::uint32_t>(bytes.data() + kFixedHeader + 4 * d));
  }
  const std::size_t count = t.element_count();
  const std::size_t width = dtype_size(t.dtype);
  const std::size_t payload = bytes.size() - kFixedHeader - 4 * ndim;
  if (payload != count * width) {
    throw Error(ErrorCode::TruncatedPayload, "payload holds " + std::to_string(payload / width) +
                                                 " values, dims require " + std::to_string(count));
  }
  const std::uint8_t* p = bytes.data() + kFixedHeader + 4 * ndim;
  t.values.resize(count);
  for (std::size_t n = 0; n < count; ++n, p += width) {
    t.values[n] = t.dtype == DType::Float64
                      ? std::bit_cast<double>(get_le<std::uint64_t>(p))
                      : static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(p)));
  }
  return t;
}

Tensor read_blob(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingBlob, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_blob(bytes);
}

void write_blob(const fs::path& path, const Tensor& tensor) {
  const auto bytes = encode_blob(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

// ---------------------------------------------------------------------------

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Dense: return "dense";
    case LayerKind::BatchNorm: return "batchnorm";
  }
  return "unknown";
}

namespace {

[[noreturn]] void parse_fail(const std::string& msg) { throw Error(ErrorCode::ManifestParse, msg); }

std::string require_string(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_string()) parse_fail(where + ": missing string field '" + key + "'");
  return j[key].get<std::string>();
}

// Accepts either a single non-negative integer or a two-element array.
std::pair<std::size_t, std::size_t> pair_field(const json& j, const char* key,
                                               std::pair<std::size_t, std::size_t> fallback,
                                               const std::string& where, bool required = false) {
  if (!j.contains(key)) {
    if (required) parse_fail(where + ": missing field '" + key + "'");
    return fallback;
  }
  const json& v = j[key];
  if (v.is_number_unsigned()) return {v.get<std::size_t>(), v.get<std::size_t>()};
  if (v.is_array() && v.size() == 2 && v[0].is_number_unsigned() && v[1].is_number_unsigned()) {
    return {v[0].get<std::size_t>(), v[1].get<std::size_t>()};
  }
  parse_fail(where + ": field '" + key + "' must be a non-negative integer or a pair of them");
}

}  // namespace

ModelManifest parse_manifest(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    parse_fail(e.what());
  }
  if (!doc.is_object()) parse_fail("manifest must be a JSON object");
  if (!doc.contains("schema") || doc["schema"] != kManifestSchema) {
    parse_fail(std::string("expected \"schema\": \"") + kManifestSchema + "\"");
  }
  if (!doc.contains("layers") || !doc["layers"].is_array()) parse_fail("missing 'layers' array");

  ModelManifest manifest;
  std::size_t index = 0;
  for (const json& item : doc["layers"]) {
    const std::string where = "layer " + std::to_string(index);
    if (!item.is_object()) parse_fail(where + ": must be an object");
    LayerEntry entry;
    entry.name = item.contains("name") && item["name"].is_string() ? item["name"].get<std::string>()
                                                                    : "layer" + std::to_string(index);
    const std::string kind = require_string(item, "kind", where);
    if (kind == "conv2d") {
      if (pair_field(item, "dilation", {1, 1}, where) != std::pair<std::size_t, std::size_t>{1, 1}) {
        parse_fail(where + ": dilated convolutions are not supported");
      }
      if (item.contains("groups") && item["groups"] != 1) {
        parse_fail(where + ": grouped convolutions are not supported");
      }
      ConvEntry conv;
      conv.kernel = require_string(item, "kernel", where);
      std::tie(conv.h_in, conv.w_in) = pair_field(item, "input", {0, 0}, where, true);
      std::tie(conv.s1, conv.s2) = pair_field(item, "stride", {1, 1}, where);
      std::tie(conv.p1, conv.p2) = pair_field(item, "padding", {0, 0}, where);
      entry.spec = conv;
    } else if (kind == "dense") {
      entry.spec = DenseEntry{require_string(item, "weight", where)};
    } else if (kind == "batchnorm") {
      entry.spec = BatchNormEntry{require_string(item, "gamma", where),
                                  require_string(item, "sigma", where)};
    } else {
      parse_fail(where + ": unknown kind '" + kind + "'");
    }
    if (item.contains("shape")) {
      try {
        entry.shape = item["shape"].get<std::vector<std::uint32_t>>();
      } catch (const json::exception&) {
        parse_fail(where + ": 'shape' must be an array of non-negative integers");
      }
    }
    manifest.layers.push_back(std::move(entry));
    ++index;
  }
  return manifest;
}

std::string dump_manifest(const ModelManifest& manifest) {
  json layers = json::array();
  for (const LayerEntry& entry : manifest.layers) {
    json item;
    item["name"] = entry.name;
    if (const auto* conv = std::get_if<ConvEntry>(&entry.spec)) {
      item["kind"] = "conv2d";
      item["kernel"] = conv->kernel;
      item["input"] = {conv->h_in, conv->w_in};
      item["stride"] = {conv->s1, conv->s2};
      item["padding"] = {conv->p1, conv->p2};
    } else if (const auto* dense = std::get_if<DenseEntry>(&entry.spec)) {
      item["kind"] = "dense";
      item["weight"] = dense->weight;
    } else {
      const auto& bn = std::get<BatchNormEntry>(entry.spec);
      item["kind"] = "batchnorm";
      item["gamma"] = bn.gamma;
      item["sigma"] = bn.sigma;
    }
    if (entry.shape) item["shape"] = *entry.shape;
    layers.push_back(std::move(item));
  }
  json doc;
  doc["schema"] = kManifestSchema;
  doc["layers"] = std::move(layers);
  return doc.dump(2) + "\n";
}

ModelManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

void write_manifest(const fs::path& path, const ModelManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << dump_manifest(manifest);
}

namespace {

Tensor load_blob_checked(const fs::path& base, const std::string& rel, std::size_t ndim,
                         const std::string& layer) {
  const fs::path path = base / rel;
  if (!fs::exists(path)) throw Error(ErrorCode::MissingBlob, layer + ": " + path.string());
  Tensor t = read_blob(path);
  if (t.dims.size() != ndim) {
    throw Error(ErrorCode::ShapeMismatch, layer + ": " + rel + " has " +
                                              std::to_string(t.dims.size()) + " dims, expected " +
                                              std::to_string(ndim));
  }
  return t;
}

}  // namespace

std::vector<ModelLayer> load_model(const fs::path& manifest_path) {
  const ModelManifest manifest = read_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  std::vector<ModelLayer> layers;
  for (const LayerEntry& entry : manifest.layers) {
    ModelLayer layer{entry.name, Matrix()};
    std::vector<std::uint32_t> dims;
    if (const auto* conv = std::get_if<ConvEntry>(&entry.spec)) {
      Tensor t = load_blob_checked(base, conv->kernel, 4, entry.name);
      dims = t.dims;
      const ConvGeometry g = ConvGeometry::make(t.dims[1], t.dims[0], conv->h_in, conv->w_in,
                                                t.dims[2], t.dims[3], conv->s1, conv->s2,
                                                conv->p1, conv->p2);
      layer.params = Kernel4D(g, std::move(t.values));
    } else if (const auto* dense = std::get_if<DenseEntry>(&entry.spec)) {
      Tensor t = load_blob_checked(base, dense->weight, 2, entry.name);
      dims = t.dims;
      layer.params = Matrix(Eigen::Map<const Matrix>(t.values.data(), t.dims[0], t.dims[1]));
    } else {
      const auto& bn = std::get<BatchNormEntry>(entry.spec);
      Tensor gamma = load_blob_checked(base, bn.gamma, 1, entry.name);
      Tensor sigma = load_blob_checked(base, bn.sigma, 1, entry.name);
      if (gamma.dims != sigma.dims) {
        throw Error(ErrorCode::ShapeMismatch, entry.name + ": gamma and sigma differ in length");
      }
      dims = gamma.dims;
      layer.params = BatchNormParams{std::move(gamma.values), std::move(sigma.values)};
    }
    if (entry.shape && *entry.shape != dims) {
      throw Error(ErrorCode::ShapeMismatch, entry.name + ": declared shape does not match blob");
    }
    layers.push_back(std::move(layer));
  }
  return layers;
}

fs::path save_model(const fs::path& dir, const std::vector<ModelLayer>& layers) {
  fs::create_directories(dir);
  ModelManifest manifest;
  for (const ModelLayer& layer : layers) {
    LayerEntry entry;
    entry.name = layer.name;
    if (const auto* k = std::get_if<Kernel4D>(&layer.params)) {
      const ConvGeometry& g = k->geometry();
      Tensor t{DType::Float64,
               {static_cast<std::uint32_t>(g.d_out), static_cast<std::uint32_t>(g.d_in),
                static_cast<std::uint32_t>(g.k1), static_cast<std::uint32_t>(g.k2)},
               {k->values().begin(), k->values().end()}};
      const std::string file = layer.name + ".cnrm";
      write_blob(dir / file, t);
      entry.spec = ConvEntry{file, g.h_in, g.w_in, g.s1, g.s2, g.p1, g.p2};
      entry.shape = t.dims;
    } else if (const auto* m = std::get_if<Matrix>(&layer.params)) {
      Tensor t{DType::Float64,
               {static_cast<std::uint32_t>(m->rows()), static_cast<std::uint32_t>(m->cols())},
               {m->data(), m->data() + m->size()}};
      const std::string file = layer.name + ".cnrm";
      write_blob(dir / file, t);
      entry.spec = DenseEntry{file};
      entry.shape = t.dims;
    } else {
      const auto& bn = std::get<BatchNormParams>(layer.params);
      const auto n = static_cast<std::uint32_t>(bn.gamma.size());
      write_blob(dir / (layer.name + ".gamma.cnrm"), Tensor{DType::Float64, {n}, bn.gamma});
      write_blob(dir / (layer.name + ".sigma.cnrm"), Tensor{DType::Float64, {n}, bn.sigma});
      entry.spec = BatchNormEntry{layer.name + ".gamma.cnrm", layer.name + ".sigma.cnrm"};
      entry.shape = std::vector<std::uint32_t>{n};
    }
    manifest.layers.push_back(std::move(entry));
  }
  const fs::path path = dir / "model.json";
  write_manifest(path, manifest);
  return path;
}

}  // namespace convnorm
