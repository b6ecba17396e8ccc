#include "torus/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "torus/errors.hpp"

namespace torus {

namespace {

constexpr std::array<char, 8> kEmbeddingMagic = {'T', 'O', 'R', 'E', 'M', 'B', '0', '1'};
constexpr std::array<char, 8> kCodebookMagic = {'T', 'O', 'R', 'P', 'Q', '0', '1', '\0'};

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  void bytes(const void* p, std::size_t n) { os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  template <typename T>
  void uint(T v) {
    unsigned char b[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    bytes(b, sizeof b);
  }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }

  void finish() {
    if (!os_) fail(Errc::Io, "write failed");
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  void bytes(void* p, std::size_t n) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) fail(Errc::TruncatedFile, "file ends before the payload does");
  }
  template <typename T>
  T uint() {
    unsigned char b[sizeof(T)];
    bytes(b, sizeof b);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(b[i]) << (8 * i));
    return v;
  }
  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }

 private:
  std::istream& is_;
};

Geometry read_geometry_tag(Reader& r) {
  const auto tag = r.uint<std::uint8_t>();
  if (tag > static_cast<std::uint8_t>(Geometry::Clifford)) {
    fail(Errc::InvariantViolation, "unknown geometry tag " + std::to_string(tag));
  }
  return static_cast<Geometry>(tag);
}

void write_header(Writer& w, Geometry g, FileDtype dtype, std::size_t dim, std::size_t n, bool has_labels) {
  w.bytes(kEmbeddingMagic.data(), kEmbeddingMagic.size());
  w.uint(static_cast<std::uint8_t>(g));
  w.uint(static_cast<std::uint8_t>(dtype));
  w.uint(std::uint16_t{0});
  if (dim > std::numeric_limits<std::uint32_t>::max()) fail(Errc::Unsupported, "dimension exceeds 32 bits");
  w.uint(static_cast<std::uint32_t>(dim));
  w.uint(static_cast<std::uint64_t>(n));
  w.uint(static_cast<std::uint8_t>(has_labels ? 1 : 0));
}

void write_labels(Writer& w, const std::optional<std::vector<Label>>& labels) {
  if (!labels) return;
  for (const Label l : *labels) w.uint(l);
}

std::vector<Label> read_labels(Reader& r, std::size_t n) {
  std::vector<Label> labels(n);
  for (auto& l : labels) l = r.uint<Label>();
  return labels;
}

std::size_t checked_count(std::uint64_t n, std::uint64_t per_row) {
  // a corrupted header must not trigger a huge allocation before truncation is noticed
  constexpr std::uint64_t limit = std::uint64_t{1} << 40;
  if (per_row != 0 && n > limit / per_row) fail(Errc::TruncatedFile, "header declares an implausible payload size");
  return static_cast<std::size_t>(n * per_row);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Errc::Io, "cannot open " + path.string() + " for reading");
  return f;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(Errc::Io, "cannot open " + path.string() + " for writing");
  return f;
}

}  // namespace

void write_embeddings(std::ostream& os, const EmbeddingSet& set) {
  set.validate();
  Writer w(os);
  write_header(w, set.geometry, FileDtype::F32, set.dim, set.size(), set.has_labels());
  for (const double x : set.data) {
    float f = static_cast<float>(x);
    if (set.geometry == Geometry::FlatTorus && f >= 1.0f) f = 0.0f;
    w.f32(f);
  }
  write_labels(w, set.labels);
  w.finish();
}

void write_codes(std::ostream& os, const CodeSet& codes) {
  Writer w(os);
  if (codes.kind == CodeSet::Kind::PQ) {
    write_header(w, codes.geometry, FileDtype::PQCodes, codes.dim, codes.size(), codes.has_labels());
    for (const auto c : codes.codes) w.uint(c);
  } else if (codes.bits == 8) {
    write_header(w, codes.geometry, FileDtype::U8Grid, codes.dim, codes.size(), codes.has_labels());
    for (const auto c : codes.codes) w.uint(static_cast<std::uint8_t>(c));
  } else if (codes.bits == 1) {
    write_header(w, codes.geometry, FileDtype::BitPacked, codes.dim, codes.size(), codes.has_labels());
    const std::size_t row_bytes = (codes.dim + 7) / 8;
    std::vector<std::uint8_t> row(row_bytes);
    for (std::size_t i = 0; i < codes.size(); ++i) {
      std::fill(row.begin(), row.end(), 0);
      const auto r = codes.row(i);
      for (std::size_t j = 0; j < codes.dim; ++j) {
        if (r[j] & 1u) row[j / 8] = static_cast<std::uint8_t>(row[j / 8] | (1u << (j % 8)));
      }
      w.bytes(row.data(), row.size());
    }
  } else {
    fail(Errc::Unsupported, std::to_string(codes.bits) + "-bit grid codes have no file encoding");
  }
  write_labels(w, codes.labels);
  w.finish();
}

StoredSet read_stored(std::istream& is) {
  Reader r(is);
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (is.gcount() != static_cast<std::streamsize>(magic.size()) || magic != kEmbeddingMagic) {
    fail(Errc::BadMagic, "not an embedding file");
  }
  const Geometry g = read_geometry_tag(r);
  const auto dtype = r.uint<std::uint8_t>();
  const auto reserved = r.uint<std::uint16_t>();
  const std::size_t dim = r.uint<std::uint32_t>();
  const std::uint64_t n = r.uint<std::uint64_t>();
  const auto has_labels = r.uint<std::uint8_t>();
  if (reserved != 0) fail(Errc::InvariantViolation, "reserved header field is not zero");
  if (dim == 0) fail(Errc::InvariantViolation, "stored dimension is zero");
  if (has_labels > 1) fail(Errc::InvariantViolation, "has_labels must be 0 or 1");

  const auto finish_labels = [&](auto& set) {
    if (has_labels) set.labels = read_labels(r, static_cast<std::size_t>(n));
  };

  switch (static_cast<FileDtype>(dtype)) {
    case FileDtype::F32: {
      EmbeddingSet set{g, dim, std::vector<double>(checked_count(n, dim)), std::nullopt};
      for (auto& x : set.data) x = r.f32();
      finish_labels(set);
      set.validate(kFileTolerance);
      return set;
    }
    case FileDtype::U8Grid: {
      CodeSet set{g, CodeSet::Kind::Grid, 8, dim, std::vector<std::uint16_t>(checked_count(n, dim)), std::nullopt};
      for (auto& c : set.codes) c = r.uint<std::uint8_t>();
      finish_labels(set);
      return set;
    }
    case FileDtype::BitPacked: {
      CodeSet set{g, CodeSet::Kind::Grid, 1, dim, std::vector<std::uint16_t>(checked_count(n, dim)), std::nullopt};
      std::vector<std::uint8_t> row((dim + 7) / 8);
      for (std::size_t i = 0; i < n; ++i) {
        r.bytes(row.data(), row.size());
        for (std::size_t j = 0; j < dim; ++j) set.codes[i * dim + j] = (row[j / 8] >> (j % 8)) & 1u;
      }
      finish_labels(set);
      return set;
    }
    case FileDtype::PQCodes: {
      CodeSet set{g, CodeSet::Kind::PQ, 0, dim, std::vector<std::uint16_t>(checked_count(n, dim)), std::nullopt};
      for (auto& c : set.codes) c = r.uint<std::uint16_t>();
      finish_labels(set);
      return set;
    }
  }
  fail(Errc::InvariantViolation, "unknown dtype " + std::to_string(dtype));
}

EmbeddingSet read_embeddings(std::istream& is) {
  StoredSet s = read_stored(is);
  if (auto* e = std::get_if<EmbeddingSet>(&s)) return std::move(*e);
  fail(Errc::Unsupported, "file holds quantised codes, not real-valued embeddings");
}

void write_codebook(std::ostream& os, const PQCodebook& cb) {
  Writer w(os);
  w.bytes(kCodebookMagic.data(), kCodebookMagic.size());
  w.uint(static_cast<std::uint32_t>(cb.m));
  w.uint(static_cast<std::uint32_t>(cb.n_bits));
  w.uint(static_cast<std::uint32_t>(cb.subdim));
  w.uint(static_cast<std::uint8_t>(cb.geometry));
  w.uint(cb.seed);
  for (const double c : cb.centroids) w.f32(static_cast<float>(c));
  w.finish();
}

PQCodebook read_codebook(std::istream& is) {
  Reader r(is);
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (is.gcount() != static_cast<std::streamsize>(magic.size()) || magic != kCodebookMagic) {
    fail(Errc::BadMagic, "not a codebook file");
  }
  PQCodebook cb;
  cb.m = r.uint<std::uint32_t>();
  cb.n_bits = r.uint<std::uint32_t>();
  cb.subdim = r.uint<std::uint32_t>();
  cb.geometry = read_geometry_tag(r);
  cb.seed = r.uint<std::uint64_t>();
  if (cb.m == 0 || cb.subdim == 0 || cb.n_bits == 0 || cb.n_bits > 16) {
    fail(Errc::InvariantViolation, "codebook header out of range");
  }
  cb.centroids.resize(checked_count(std::uint64_t{cb.m} * cb.k(), cb.subdim));
  for (auto& c : cb.centroids) c = r.f32();
  return cb;
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingSet& set) {
  auto f = open_out(path);
  write_embeddings(f, set);
}

void save_codes(const std::filesystem::path& path, const CodeSet& codes) {
  auto f = open_out(path);
  write_codes(f, codes);
}

StoredSet load_stored(const std::filesystem::path& path) {
  auto f = open_in(path);
  return read_stored(f);
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  auto f = open_in(path);
  return read_embeddings(f);
}

void save_codebook(const std::filesystem::path& path, const PQCodebook& cb) {
  auto f = open_out(path);
  write_codebook(f, cb);
}

PQCodebook load_codebook(const std::filesystem::path& path) {
  auto f = open_in(path);
  return read_codebook(f);
}

// ---- manifests ---------------------------------------------------------------

std::string manifest_to_json(const TrainManifest& m) {
  const TrainConfig& t = m.train;
  const SyntheticDatasetConfig& d = m.data;
  nlohmann::ordered_json j;
  j["version"] = m.version;
  j["command"] = "train";
  j["train"] = {
      {"geometry", std::string(train_geometry_name(t.geometry))},
      {"model", std::string(model_kind_name(t.model))},
      {"dim", t.embed_dim},
      {"supcon_weight", t.supcon_weight},
      {"koleo", t.koleo_weight},
      {"clip", std::isinf(t.clip_threshold) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(t.clip_threshold)},
      {"lr", t.learning_rate},
      {"epochs", t.epochs},
      {"batch", t.batch_size},
      {"temperature", t.temperature},
      {"patience", t.patience},
      {"min_delta", t.min_delta},
      {"seed", t.seed},
  };
  j["data"] = {
      {"classes", d.n_classes},   {"points", d.n_per_class}, {"test_points", d.n_test_per_class},
      {"input_dim", d.input_dim}, {"sigma", d.spread},       {"seed", d.seed},
  };
  j["artifacts"] = {{"embeddings", m.embeddings_path}, {"log", m.log_path}};
  return j.dump(2) + "\n";
}

TrainManifest manifest_from_json(const std::string& text) {
  TrainManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& t = j.at("train");
    const auto& d = j.at("data");
    const auto geometry = parse_train_geometry(t.at("geometry").get<std::string>());
    const auto model = parse_model_kind(t.at("model").get<std::string>());
    if (!geometry || !model) fail(Errc::InvariantViolation, "manifest names an unknown geometry or model");
    m.version = j.at("version").get<std::string>();
    m.train.geometry = *geometry;
    m.train.model = *model;
    m.train.embed_dim = t.at("dim").get<std::size_t>();
    m.train.supcon_weight = t.at("supcon_weight").get<double>();
    m.train.koleo_weight = t.at("koleo").get<double>();
    m.train.clip_threshold =
        t.at("clip").is_null() ? std::numeric_limits<double>::infinity() : t.at("clip").get<double>();
    m.train.learning_rate = t.at("lr").get<double>();
    m.train.epochs = t.at("epochs").get<std::size_t>();
    m.train.batch_size = t.at("batch").get<std::size_t>();
    m.train.temperature = t.at("temperature").get<double>();
    m.train.patience = t.at("patience").get<std::size_t>();
    m.train.min_delta = t.at("min_delta").get<double>();
    m.train.seed = t.at("seed").get<std::uint64_t>();
    m.data.n_classes = d.at("classes").get<std::size_t>();
    m.data.n_per_class = d.at("points").get<std::size_t>();
    m.data.n_test_per_class = d.at("test_points").get<std::size_t>();
    m.data.input_dim = d.at("input_dim").get<std::size_t>();
    m.data.spread = d.at("sigma").get<double>();
    m.data.seed = d.at("seed").get<std::uint64_t>();
    if (const auto a = j.find("artifacts"); a != j.end()) {
      m.embeddings_path = a->value("embeddings", "");
      m.log_path = a->value("log", "");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::InvariantViolation, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

}  // namespace torus
