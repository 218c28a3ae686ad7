#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "convnorm/kernel.hpp"

namespace convnorm {

// ---------------------------------------------------------------------------
// Tensor blobs
//
//   offset  size      field
//   0       4         magic "CNRM"
//   4       2         version, u16 little-endian (currently 1)
//   6       1         dtype: 0 = float64, 1 = float32
//   7       1         ndim
//   8       4*ndim    dims, u32 little-endian each
//   ...     n*size    payload, row-major, little-endian IEEE-754
//
// float32 payloads are widened to double on load and narrowed again on write,
// so a blob read and written back is bit-identical.
// ---------------------------------------------------------------------------

inline constexpr std::uint16_t kBlobVersion = 1;

enum class DType : std::uint8_t { Float64 = 0, Float32 = 1 };

struct Tensor {
  DType dtype = DType::Float64;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;

  std::size_t element_count() const noexcept;
};

std::vector<std::uint8_t> encode_blob(const Tensor& tensor);
/// Throws BadMagic, BadVersion, UnsupportedDtype or TruncatedPayload.
Tensor decode_blob(std::span<const std::uint8_t> bytes);

Tensor read_blob(const std::filesystem::path& path);
void write_blob(const std::filesystem::path& path, const Tensor& tensor);

// ---------------------------------------------------------------------------
// Model manifests (JSON). See README for the schema.
// ---------------------------------------------------------------------------

inline constexpr const char* kManifestSchema = "convnorm.manifest/1";

enum class LayerKind { Conv2d, Dense, BatchNorm };

struct ConvEntry {
  std::string kernel;  // blob path, relative to the manifest
  std::size_t h_in = 0;
  std::size_t w_in = 0;
  std::size_t s1 = 1;
  std::size_t s2 = 1;
  std::size_t p1 = 0;
  std::size_t p2 = 0;
  bool operator==(const ConvEntry&) const = default;
};

struct DenseEntry {
  std::string weight;
  bool operator==(const DenseEntry&) const = default;
};

struct BatchNormEntry {
  std::string gamma;
  std::string sigma;
  bool operator==(const BatchNormEntry&) const = default;
};

struct LayerEntry {
  std::string name;
  std::variant<ConvEntry, DenseEntry, BatchNormEntry> spec;
  // Optional declared shape, checked against the blob when present.
  std::optional<std::vector<std::uint32_t>> shape;
  bool operator==(const LayerEntry&) const = default;
};

struct ModelManifest {
  std::vector<LayerEntry> layers;
  bool operator==(const ModelManifest&) const = default;
};

/// Throws ManifestParse (syntax, unknown kind, unsupported dilation/groups,
/// missing fields) or Io.
ModelManifest parse_manifest(const std::string& text);
std::string dump_manifest(const ModelManifest& manifest);

ModelManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const ModelManifest& manifest);

struct BatchNormParams {
  std::vector<double> gamma;
  std::vector<double> sigma;
};

struct ModelLayer {
  std::string name;
  std::variant<Kernel4D, Matrix, BatchNormParams> params;

  LayerKind kind() const noexcept { return static_cast<LayerKind>(params.index()); }
};

std::string_view to_string(LayerKind kind) noexcept;

/// Loads every layer in manifest order. Throws ManifestParse, MissingBlob,
/// ShapeMismatch, InvalidGeometry, or a blob error.
std::vector<ModelLayer> load_model(const std::filesystem::path& manifest_path);

/// Writes `<dir>/<name>*.cnrm` blobs (float64) and `<dir>/model.json`.
/// Returns the manifest path.
std::filesystem::path save_model(const std::filesystem::path& dir,
                                 const std::vector<ModelLayer>& layers);

}  // namespace convnorm
