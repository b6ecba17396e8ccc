#pragma once

// Binary embedding and codebook files, and JSON run manifests.
//
// Embedding file (little-endian):
//   "TOREMB01" | u8 geometry | u8 dtype | u16 reserved = 0 | u32 dim | u64 N |
//   u8 has_labels | payload | [N x u32 labels]
// dtype 0: f32 rows; 1: u8 grid codes; 2: 1-bit codes packed LSB first,
// ceil(dim / 8) bytes per row; 3: u16 PQ codes, dim = number of subspaces.
//
// Codebook file:
//   "TORPQ01\0" | u32 m | u32 n_bits | u32 subdim | u8 geometry | u64 seed |
//   m x 2^n_bits x subdim f32 centroids

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>

#include "torus/embedding_set.hpp"
#include "torus/quantization.hpp"
#include "torus/training.hpp"

namespace torus {

enum class FileDtype : std::uint8_t { F32 = 0, U8Grid = 1, BitPacked = 2, PQCodes = 3 };

/// Tolerance applied to the geometry invariant when reading f32 rows.
inline constexpr double kFileTolerance = 1e-6;

void write_embeddings(std::ostream& os, const EmbeddingSet& set);
/// Grid codes with bits 8 or 1, or PQ codes; other widths raise Unsupported.
void write_codes(std::ostream& os, const CodeSet& codes);

/// Either real rows or codes, depending on the stored dtype. PQ codes come
/// back with bits = 0 until paired with their codebook.
using StoredSet = std::variant<EmbeddingSet, CodeSet>;

/// Throws BadMagic, TruncatedFile, or InvariantViolation (index = row) when
/// an f32 row is off its geometry by more than kFileTolerance.
StoredSet read_stored(std::istream& is);
/// read_stored, requiring real rows.
EmbeddingSet read_embeddings(std::istream& is);

void write_codebook(std::ostream& os, const PQCodebook& cb);
PQCodebook read_codebook(std::istream& is);

// Path wrappers raising Errc::Io when a file cannot be opened.
void save_embeddings(const std::filesystem::path& path, const EmbeddingSet& set);
void save_codes(const std::filesystem::path& path, const CodeSet& codes);
StoredSet load_stored(const std::filesystem::path& path);
EmbeddingSet load_embeddings(const std::filesystem::path& path);
void save_codebook(const std::filesystem::path& path, const PQCodebook& cb);
PQCodebook load_codebook(const std::filesystem::path& path);

/// Everything needed to re-run a training invocation.
struct TrainManifest {
  TrainConfig train;
  SyntheticDatasetConfig data;
  std::string version = TORUS_VERSION;
  // informational; replay writes wherever --out points
  std::string embeddings_path;
  std::string log_path;
};

std::string manifest_to_json(const TrainManifest& m);
/// Throws InvariantViolation on missing or ill-typed fields.
TrainManifest manifest_from_json(const std::string& text);

}  // namespace torus
