// torus: command-line front end for the hypertoroidal embedding library.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "torus/embedding_set.hpp"
#include "torus/errors.hpp"
#include "torus/io.hpp"
#include "torus/metrics.hpp"
#include "torus/quantization.hpp"
#include "torus/retrieval.hpp"
#include "torus/training.hpp"

namespace {

using namespace torus;

constexpr int kUsage = 2;
constexpr int kRuntime = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Errc::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(Errc::Io, "cannot open " + path + " for writing");
  f << text;
  if (!f) fail(Errc::Io, "write failed: " + path);
}

// Writes to `path`, or stdout when it is empty or "-".
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(Errc::Io, "cannot open " + path + " for writing");
  fn(f);
  if (!f) fail(Errc::Io, "write failed: " + path);
}

double parse_threshold(const std::string& s) {
  if (s == "inf" || s == "none") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !(v > 0.0)) throw UsageError("--clip expects a positive number or 'inf', got '" + s + "'");
  return v;
}

std::vector<std::size_t> parse_dims(const std::string& s) {
  std::vector<std::size_t> dims;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || v == 0) throw UsageError("--dims expects positive integers, got '" + s + "'");
    dims.push_back(v);
  }
  if (dims.empty()) throw UsageError("--dims is empty");
  return dims;
}

// ---- train ---------------------------------------------------------------------

struct TrainArgs {
  std::string geometry = "hypersphere";
  std::string model = "linear";
  std::string clip = "100";
  std::string out;
  std::string manifest;
  std::string support_out;
  TrainManifest m;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> data_seed;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* c = app.add_subcommand("train", "train embeddings on the synthetic class-cluster dataset");
  TrainConfig& t = a.m.train;
  SyntheticDatasetConfig& d = a.m.data;
  c->add_option("--geometry", a.geometry, "hypersphere | torusC | torusN");
  c->add_option("--model", a.model, "linear | free");
  c->add_option("--dim", t.embed_dim, "embedding dimension before projection");
  c->add_option("--koleo", t.koleo_weight, "KoLeo weight");
  c->add_option("--supcon", t.supcon_weight, "SupCon weight");
  c->add_option("--clip", a.clip, "global gradient-norm threshold, or 'inf'");
  c->add_option("--lr", t.learning_rate, "Adam learning rate");
  c->add_option("--epochs", t.epochs);
  c->add_option("--batch", t.batch_size);
  c->add_option("--temperature", t.temperature);
  c->add_option("--patience", t.patience);
  c->add_option("--min-delta", t.min_delta);
  c->add_option("--seed", a.seed, "training seed");
  c->add_option("--classes", d.n_classes);
  c->add_option("--points", d.n_per_class, "training points per class");
  c->add_option("--test-points", d.n_test_per_class, "held-out points per class");
  c->add_option("--input-dim", d.input_dim);
  c->add_option("--sigma", d.spread, "within-class spread");
  c->add_option("--data-seed", a.data_seed, "dataset seed (defaults to --seed)");
  c->add_option("--manifest", a.manifest, "replay a manifest written by a previous run");
  c->add_option("--support-out", a.support_out, "also write the training-set embeddings");
  c->add_option("--out", a.out, "output embedding file")->required();
}

int run_train(TrainArgs& a, const CLI::App& cmd) {
  TrainManifest& m = a.m;
  if (!a.manifest.empty()) {
    const std::vector<std::string> free_flags = {"--manifest", "--out", "--support-out"};
    for (const auto* opt : cmd.get_options()) {
      if (opt->count() == 0) continue;
      bool allowed = false;
      for (const auto& f : free_flags) allowed = allowed || opt->check_lname(f.substr(2));
      if (!allowed) throw UsageError("--manifest cannot be combined with " + opt->get_name());
    }
    m = manifest_from_json(read_text(a.manifest));
  } else {
    if (!a.seed) throw UsageError("train needs an explicit --seed");
    const auto g = parse_train_geometry(a.geometry);
    if (!g) throw UsageError("unknown --geometry '" + a.geometry + "'");
    const auto k = parse_model_kind(a.model);
    if (!k) throw UsageError("unknown --model '" + a.model + "'");
    m.train.geometry = *g;
    m.train.model = *k;
    m.train.clip_threshold = parse_threshold(a.clip);
    m.train.seed = *a.seed;
    m.data.seed = a.data_seed.value_or(*a.seed);
  }
  m.train.validate();

  const Dataset data = make_synthetic_dataset(m.data);
  const TrainResult result = train(data, m.train);

  if (m.train.model == ModelKind::LinearEncoder) {
    save_embeddings(a.out, embed(result.model, data.test_x, data.test_y));
  } else {
    save_embeddings(a.out, result.train_embeddings);
  }
  if (!a.support_out.empty()) save_embeddings(a.support_out, result.train_embeddings);
  m.embeddings_path = a.out;
  m.log_path = a.out + ".log.csv";
  write_text(a.out + ".manifest.json", manifest_to_json(m));
  emit(m.log_path, [&](std::ostream& os) { write_train_log_csv(os, result.log); });

  if (result.log.diverged) std::cerr << "warning: training diverged: " << result.log.divergence_reason << '\n';
  return 0;
}

// ---- project ------------------------------------------------------------------

struct ProjectArgs {
  std::string mode;
  std::string in;
  std::string out;
};

void add_project(CLI::App& app, ProjectArgs& a) {
  auto* c = app.add_subcommand("project", "apply a geometry projection to a stored set");
  c->add_option("--mode", a.mode, "l2 | clifford | l2p | to-flat | to-clifford")->required();
  c->add_option("--in", a.in)->required();
  c->add_option("--out", a.out)->required();
}

int run_project(const ProjectArgs& a) {
  const auto mode = parse_projection(a.mode);
  if (!mode) throw UsageError("unknown --mode '" + a.mode + "'");
  save_embeddings(a.out, project_set(load_embeddings(a.in), *mode));
  return 0;
}

// ---- quantize -----------------------------------------------------------------

struct QuantizeArgs {
  std::string config;
  std::string in;
  std::string out;
  std::string codebook;
  std::string recon_out;
  std::optional<std::uint64_t> seed;
};

void add_quantize(CLI::App& app, QuantizeArgs& a) {
  auto* c = app.add_subcommand("quantize", "grid or product quantisation of a stored set");
  c->add_option("--config", a.config, "grid8 | grid1 | pq8x16 | pq8x4 | pq8x2 | pq8x1 | pq4x4 | pq4x2")->required();
  c->add_option("--in", a.in)->required();
  c->add_option("--out", a.out, "output code file")->required();
  c->add_option("--codebook", a.codebook, "PQ codebook output");
  c->add_option("--recon-out", a.recon_out, "also write the dequantised vectors");
  c->add_option("--seed", a.seed, "k-means seed (required for PQ)");
}

int run_quantize(const QuantizeArgs& a) {
  const auto cfg = parse_quant_config(a.config);
  if (!cfg) throw UsageError("unknown --config '" + a.config + "'");
  if (cfg->is_pq() && !a.seed) throw UsageError("product quantisation needs an explicit --seed");
  if (!cfg->is_pq() && !a.codebook.empty()) throw UsageError("--codebook only applies to PQ configurations");
  const QuantizedSet q = quantize(load_embeddings(a.in), *cfg, a.seed.value_or(0));
  save_codes(a.out, q.codes);
  if (q.codebook && !a.codebook.empty()) save_codebook(a.codebook, *q.codebook);
  if (!a.recon_out.empty()) save_embeddings(a.recon_out, q.reconstruction);
  return 0;
}

// ---- search ---------------------------------------------------------------------

struct SearchArgs {
  std::string index;
  std::string queries;
  std::string metric;
  std::string codebook;
  std::string out;
  std::size_t k = 10;
};

void add_search(CLI::App& app, SearchArgs& a) {
  auto* c = app.add_subcommand("search", "exact k-nearest-neighbour search");
  c->add_option("--index", a.index)->required();
  c->add_option("--queries", a.queries)->required();
  c->add_option("--k", a.k)->required();
  c->add_option("--metric", a.metric, "cosine | flat-l1 | flat-l2 | flat-l2sq | euclidean | hamming")->required();
  c->add_option("--codebook", a.codebook, "decode PQ codes with this codebook before searching");
  c->add_option("--out", a.out, "ranked ids CSV (default stdout)");
}

StoredSet decode_if_pq(StoredSet s, const std::string& codebook) {
  auto* codes = std::get_if<CodeSet>(&s);
  if (!codes || codes->kind != CodeSet::Kind::PQ) return s;
  if (codebook.empty()) throw UsageError("PQ code files need --codebook");
  const PQCodebook cb = load_codebook(codebook);
  codes->bits = cb.n_bits;
  return pq_decode_set(*codes, cb);
}

int run_search(const SearchArgs& a) {
  const auto kind = parse_distance(a.metric);
  if (!kind) throw UsageError("unknown --metric '" + a.metric + "'");
  if (a.k == 0) throw UsageError("--k must be positive");
  const StoredSet index = decode_if_pq(load_stored(a.index), a.codebook);
  const StoredSet queries = decode_if_pq(load_stored(a.queries), a.codebook);
  if (index.index() != queries.index()) fail(Errc::IncompatibleGeometry, "index and queries use different encodings");

  std::vector<RankedList> ranked;
  if (const auto* e = std::get_if<EmbeddingSet>(&index)) {
    ranked = knn_search(std::get<EmbeddingSet>(queries), *e, a.k, *kind);
  } else {
    ranked = knn_search(std::get<CodeSet>(queries), std::get<CodeSet>(index), a.k, *kind);
  }
  emit(a.out, [&](std::ostream& os) {
    os << "query,rank,id,distance\n";
    char buf[64];
    for (std::size_t q = 0; q < ranked.size(); ++q) {
      for (std::size_t r = 0; r < ranked[q].size(); ++r) {
        std::snprintf(buf, sizeof buf, "%.17g", ranked[q][r].distance);
        os << q << ',' << r << ',' << ranked[q][r].id << ',' << buf << '\n';
      }
    }
  });
  return 0;
}

// ---- eval -----------------------------------------------------------------------

struct EvalArgs {
  std::string in;
  std::string quant;
  std::string support;
  std::string manifest;
  std::string format = "csv";
  std::string out;
  std::size_t few_shot = 0;
  std::size_t episodes = 10;
  std::optional<std::uint64_t> seed;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* c = app.add_subcommand("eval", "retrieval and few-shot evaluation");
  c->add_option("--in", a.in, "embedding file (evaluation / query set)")->required();
  c->add_option("--quant", a.quant, "quantise before evaluating");
  c->add_option("--few-shot", a.few_shot, "support points per class for prototype classification");
  c->add_option("--episodes", a.episodes, "few-shot episodes");
  c->add_option("--support", a.support, "support pool for few-shot (defaults to --in)");
  c->add_option("--manifest", a.manifest, "training manifest supplying report metadata");
  c->add_option("--seed", a.seed, "seed for PQ training and few-shot sampling");
  c->add_option("--format", a.format, "csv | json");
  c->add_option("--out", a.out, "report file (default stdout)");
}

int run_eval(const EvalArgs& a) {
  if (a.format != "csv" && a.format != "json") throw UsageError("--format must be csv or json");
  std::optional<QuantConfig> quant;
  if (!a.quant.empty()) {
    quant = parse_quant_config(a.quant);
    if (!quant) throw UsageError("unknown --quant '" + a.quant + "'");
  }
  if (a.few_shot > 0 && quant) throw UsageError("--few-shot evaluates unquantised embeddings; drop --quant");
  if ((a.few_shot > 0 || (quant && quant->is_pq())) && !a.seed) {
    throw UsageError("PQ and few-shot evaluation need an explicit --seed");
  }

  const EmbeddingSet set = load_embeddings(a.in);
  EvalContext ctx;
  ctx.seed = a.seed.value_or(0);
  if (!a.manifest.empty()) {
    const TrainManifest m = manifest_from_json(read_text(a.manifest));
    ctx.geometry = std::string(train_geometry_name(m.train.geometry));
    ctx.dim = m.train.embed_dim;
    ctx.koleo_weight = m.train.koleo_weight;
  }

  std::vector<EvalReport> reports;
  if (a.few_shot > 0) {
    const EmbeddingSet pool = a.support.empty() ? set : load_embeddings(a.support);
    const FewShotResult r = few_shot_eval(pool, set, a.few_shot, a.episodes, ctx.seed);
    EvalReport rep{ctx.geometry.empty() ? std::string(geometry_name(set.geometry)) : ctx.geometry,
                   ctx.dim == 0 ? set.dim : ctx.dim,
                   ctx.koleo_weight,
                   "none",
                   "few_shot_accuracy_" + std::to_string(a.few_shot) + "shot",
                   r.mean_accuracy,
                   ctx.seed};
    reports.push_back(rep);
    if (r.degenerate_prototypes > 0) {
      std::cerr << "note: " << r.degenerate_prototypes << " degenerate prototype parts fell back to a support value\n";
    }
  } else {
    reports = eval_pipeline(set, quant, ctx);
  }
  emit(a.out, [&](std::ostream& os) {
    if (a.format == "csv") {
      write_reports_csv(os, reports);
    } else {
      write_reports_json(os, reports);
    }
  });
  return 0;
}

// ---- simulate-distances ---------------------------------------------------------

struct SimulateArgs {
  std::string geometry;
  std::string dims = "2,16,128";
  std::string metric;
  std::string out_prefix = "distances";
  std::size_t pairs = 10000;
  std::size_t bins = 50;
  std::optional<std::uint64_t> seed;
};

void add_simulate(CLI::App& app, SimulateArgs& a) {
  auto* c = app.add_subcommand("simulate-distances", "distance distributions of uniformly random pairs");
  c->add_option("--geometry", a.geometry, "hypersphere | flat-torus | clifford")->required();
  c->add_option("--dims", a.dims, "comma-separated dimensions");
  c->add_option("--pairs", a.pairs);
  c->add_option("--bins", a.bins);
  c->add_option("--metric", a.metric, "distance (default: cosine, or flat-l1 and flat-l2 for the flat torus)");
  c->add_option("--seed", a.seed)->required();
  c->add_option("--out-prefix", a.out_prefix, "histograms go to PREFIX_<geometry>_<metric>_D<d>.csv");
}

int run_simulate(const SimulateArgs& a) {
  const auto g = parse_geometry(a.geometry);
  if (!g || *g == Geometry::Euclidean) throw UsageError("unknown --geometry '" + a.geometry + "'");
  if (a.pairs == 0 || a.bins == 0) throw UsageError("--pairs and --bins must be positive");
  const std::vector<std::size_t> dims = parse_dims(a.dims);
  std::vector<DistanceKind> kinds;
  if (!a.metric.empty()) {
    const auto k = parse_distance(a.metric);
    if (!k) throw UsageError("unknown --metric '" + a.metric + "'");
    kinds.push_back(*k);
  } else if (*g == Geometry::FlatTorus) {
    kinds = {DistanceKind::FlatTorusL1, DistanceKind::FlatTorusL2};
  } else {
    kinds = {DistanceKind::CosineClifford};
  }

  std::cout << "geometry,metric,D,pairs,mean,stddev,file\n";
  for (const DistanceKind kind : kinds) {
    for (const std::size_t d : dims) {
      const DistanceHistogram h = distance_distribution_sim(*g, kind, d, a.pairs, *a.seed, a.bins);
      const std::string file = a.out_prefix + "_" + std::string(geometry_name(*g)) + "_" +
                               std::string(distance_name(kind)) + "_D" + std::to_string(d) + ".csv";
      emit(file, [&](std::ostream& os) { write_histogram_csv(os, h); });
      char buf[96];
      std::snprintf(buf, sizeof buf, "%.10f,%.10f", h.mean, h.stddev);
      std::cout << geometry_name(*g) << ',' << distance_name(kind) << ',' << d << ',' << h.pairs << ',' << buf << ','
                << file << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"torus: hypertoroidal embeddings, quantisation and retrieval"};
  app.set_version_flag("--version", TORUS_VERSION);
  app.require_subcommand(1);

  TrainArgs train_args;
  ProjectArgs project_args;
  QuantizeArgs quantize_args;
  SearchArgs search_args;
  EvalArgs eval_args;
  SimulateArgs simulate_args;
  add_train(app, train_args);
  add_project(app, project_args);
  add_quantize(app, quantize_args);
  add_search(app, search_args);
  add_eval(app, eval_args);
  add_simulate(app, simulate_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (app.got_subcommand("train")) return run_train(train_args, *app.get_subcommand("train"));
    if (app.got_subcommand("project")) return run_project(project_args);
    if (app.got_subcommand("quantize")) return run_quantize(quantize_args);
    if (app.got_subcommand("search")) return run_search(search_args);
    if (app.got_subcommand("eval")) return run_eval(eval_args);
    if (app.got_subcommand("simulate-distances")) return run_simulate(simulate_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
