#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "convnorm/error.hpp"
#include "convnorm/io.hpp"
#include "support.hpp"

using namespace convnorm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("convnorm_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ErrorCode decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_blob(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a decode error");
  return ErrorCode::Io;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("blob byte layout") {
  const Tensor t{DType::Float64, {2, 1, 1, 1}, {3.0, -4.0}};
  const auto bytes = encode_blob(t);
  REQUIRE(bytes.size() == 8 + 16 + 16);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "CNRM");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 0);
  CHECK(bytes[7] == 4);
  CHECK(bytes[8] == 2);  // first dim, little-endian
  CHECK(bytes[9] == 0);
  // 3.0 = 0x4008000000000000, little-endian
  CHECK(bytes[24 + 7] == 0x40);
  CHECK(bytes[24 + 6] == 0x08);
  const Tensor back = decode_blob(bytes);
  CHECK(back.dims == t.dims);
  CHECK(back.values == t.values);
}

TEST_CASE("property: blob round-trip is bitwise identity") {
  std::mt19937_64 gen(71);
  std::uniform_int_distribution<std::uint32_t> dim(1, 5);
  std::uniform_int_distribution<int> ndim(0, 4);
  TempDir dir;
  for (int trial = 0; trial < 100; ++trial) {
    Tensor t;
    t.dtype = trial % 3 == 0 ? DType::Float32 : DType::Float64;
    for (int d = ndim(gen); d > 0; --d) t.dims.push_back(dim(gen));
    for (std::size_t n = 0; n < t.element_count(); ++n) {
      const double raw = std::bit_cast<double>(gen() & 0x7fefffffffffffffULL) * (gen() & 1 ? 1 : -1);
      t.values.push_back(t.dtype == DType::Float32 ? static_cast<double>(static_cast<float>(
                                                         std::uniform_real_distribution<double>(-1e6, 1e6)(gen)))
                                                   : raw);
    }
    const fs::path p = dir.path / ("t" + std::to_string(trial) + ".cnrm");
    write_blob(p, t);
    const Tensor back = read_blob(p);
    CHECK(back.dtype == t.dtype);
    CHECK(back.dims == t.dims);
    CHECK(bitwise_equal(back.values, t.values));
    CHECK(encode_blob(back) == encode_blob(t));
  }
}

TEST_CASE("blob errors") {
  const Tensor t{DType::Float64, {2, 2, 3, 3}, std::vector<double>(36, 1.0)};
  auto bytes = encode_blob(t);

  SUBCASE("truncated payload") {
    bytes.pop_back();
    CHECK(decode_error(bytes) == ErrorCode::TruncatedPayload);
  }
  SUBCASE("dims (2,2,3,3) followed by the wrong number of values") {
    // the header promises 36 float64 values
    std::vector<std::uint8_t> header(bytes.begin(), bytes.begin() + 8 + 16);
    for (std::size_t count : {71u, 35u, 0u}) {
      std::vector<std::uint8_t> file = header;
      file.resize(header.size() + 8 * count, 0);
      CHECK(decode_error(file) == ErrorCode::TruncatedPayload);
    }
    header.resize(header.size() + 8 * 36, 0);
    CHECK_NOTHROW(decode_blob(header));
  }
  SUBCASE("magic") {
    bytes[0] = 'X';
    CHECK(decode_error(bytes) == ErrorCode::BadMagic);
    CHECK(decode_error({}) == ErrorCode::BadMagic);
  }
  SUBCASE("version") {
    bytes[4] = 2;
    CHECK(decode_error(bytes) == ErrorCode::BadVersion);
  }
  SUBCASE("dtype") {
    bytes[6] = 7;
    CHECK(decode_error(bytes) == ErrorCode::UnsupportedDtype);
  }
  SUBCASE("header cut inside dims") {
    bytes.resize(10);
    CHECK(decode_error(bytes) == ErrorCode::TruncatedPayload);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_blob("/nonexistent/convnorm.cnrm"), Error);
  }
}

TEST_CASE("float32 blobs widen on load") {
  TempDir dir;
  Tensor t{DType::Float32, {3}, {0.1f, -2.5f, 1e-3f}};
  write_blob(dir.path / "f.cnrm", t);
  const Tensor back = read_blob(dir.path / "f.cnrm");
  CHECK(back.values[0] == static_cast<double>(0.1f));
  CHECK(fs::file_size(dir.path / "f.cnrm") == 8 + 4 + 12);
}

TEST_CASE("manifest parse / dump") {
  const std::string text = R"({
    "schema": "convnorm.manifest/1",
    "layers": [
      {"name": "c1", "kind": "conv2d", "kernel": "c1.cnrm", "input": [32, 30], "stride": 2, "padding": [1, 0]},
      {"kind": "dense", "weight": "fc.cnrm", "shape": [10, 64]},
      {"name": "bn", "kind": "batchnorm", "gamma": "g.cnrm", "sigma": "s.cnrm"}
    ]})";
  const ModelManifest m = parse_manifest(text);
  REQUIRE(m.layers.size() == 3);
  const auto& conv = std::get<ConvEntry>(m.layers[0].spec);
  CHECK(conv.h_in == 32);
  CHECK(conv.w_in == 30);
  CHECK(conv.s1 == 2);
  CHECK(conv.s2 == 2);
  CHECK(conv.p1 == 1);
  CHECK(conv.p2 == 0);
  CHECK(m.layers[1].name == "layer1");
  CHECK(*m.layers[1].shape == std::vector<std::uint32_t>{10, 64});
  CHECK(parse_manifest(dump_manifest(m)) == m);

  auto parse_code = [](const std::string& s) {
    try {
      parse_manifest(s);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(parse_code("{not json") == ErrorCode::ManifestParse);
  CHECK(parse_code(R"({"layers": []})") == ErrorCode::ManifestParse);
  CHECK(parse_code(R"({"schema": "convnorm.manifest/1", "layers": [{"kind": "pool"}]})") ==
        ErrorCode::ManifestParse);
  CHECK(parse_code(R"({"schema": "convnorm.manifest/1", "layers": [{"kind": "conv2d", "kernel": "k", "input": 8, "dilation": 2}]})") ==
        ErrorCode::ManifestParse);
  CHECK(parse_code(R"({"schema": "convnorm.manifest/1", "layers": [{"kind": "conv2d", "kernel": "k", "input": 8, "groups": 2}]})") ==
        ErrorCode::ManifestParse);
  CHECK(parse_code(R"({"schema": "convnorm.manifest/1", "layers": [{"kind": "conv2d", "kernel": "k"}]})") ==
        ErrorCode::ManifestParse);
}

TEST_CASE("property: model save / load round-trip") {
  std::mt19937_64 gen(73);
  for (int trial = 0; trial < 20; ++trial) {
    TempDir dir;
    std::vector<ModelLayer> layers;
    const ConvGeometry g = convnorm::testing::random_geometry(gen, {}, trial % 2 == 0);
    layers.push_back({"conv", convnorm::testing::random_kernel(gen, g)});
    layers.push_back({"fc", Matrix(Matrix::Random(3, 5))});
    layers.push_back({"bn", BatchNormParams{{1.0, -2.0}, {0.5, 4.0}}});

    const fs::path manifest = save_model(dir.path, layers);
    const auto loaded = load_model(manifest);
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[0].name == "conv");
    CHECK(loaded[0].kind() == LayerKind::Conv2d);
    const auto& k0 = std::get<Kernel4D>(layers[0].params);
    const auto& k1 = std::get<Kernel4D>(loaded[0].params);
    CHECK(k1.geometry() == k0.geometry());
    CHECK(bitwise_equal({k1.values().begin(), k1.values().end()}, {k0.values().begin(), k0.values().end()}));
    CHECK(std::get<Matrix>(loaded[1].params) == std::get<Matrix>(layers[1].params));
    CHECK(std::get<BatchNormParams>(loaded[2].params).sigma == std::vector<double>{0.5, 4.0});
    CHECK(read_manifest(manifest) == parse_manifest(dump_manifest(read_manifest(manifest))));
  }
}

TEST_CASE("load_model errors") {
  TempDir dir;
  write_blob(dir.path / "k.cnrm", Tensor{DType::Float64, {1, 1, 3, 3}, std::vector<double>(9, 1.0)});
  auto code = [&](const std::string& layer) {
    write_text(dir.path / "m.json",
               R"({"schema": "convnorm.manifest/1", "layers": [)" + layer + "]}");
    try {
      load_model(dir.path / "m.json");
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(code(R"({"kind": "conv2d", "kernel": "missing.cnrm", "input": 8})") == ErrorCode::MissingBlob);
  CHECK(code(R"({"kind": "conv2d", "kernel": "k.cnrm", "input": 8, "shape": [1, 1, 2, 2]})") ==
        ErrorCode::ShapeMismatch);
  CHECK(code(R"({"kind": "dense", "weight": "k.cnrm"})") == ErrorCode::ShapeMismatch);
  CHECK(code(R"({"kind": "conv2d", "kernel": "k.cnrm", "input": 2})") == ErrorCode::InvalidGeometry);
  CHECK(code(R"({"kind": "conv2d", "kernel": "k.cnrm", "input": 8})") == ErrorCode::Io);  // loads fine
  CHECK_THROWS_AS(load_model(dir.path / "nope.json"), Error);
}
