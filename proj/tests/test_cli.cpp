#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "torus/io.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace torus;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::path(TORUS_TEST_TMP) / "cli";
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

int run(const std::string& args, const std::string& stdout_file = "") {
  const std::string out = stdout_file.empty() ? "/dev/null" : path(stdout_file);
  const std::string cmd = std::string("\"") + TORUS_CLI_PATH + "\" " + args + " > \"" + out + "\" 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& file) {
  std::ifstream f(path(file), std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

const std::string kTrain =
    "train --geometry torusN --dim 8 --epochs 3 --classes 3 --points 30 --test-points 10 --input-dim 8 --seed 4 ";

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("train --geometry torusN --out " + path("x.emb")), 2);  // no seed
  EXPECT_EQ(run("train --geometry ring --seed 1 --out " + path("x.emb")), 2);
  EXPECT_EQ(run("simulate-distances --geometry hypersphere"), 2);
  EXPECT_EQ(run("search --index a --queries b --k 1 --metric nope"), 2);
}

TEST(Cli, RuntimeErrorsExitOne) {
  EXPECT_EQ(run("eval --in " + path("does_not_exist.emb")), 1);
  EmbeddingSet bare = make_set(Geometry::FlatTorus, 2, {0.1, 0.2, 0.3, 0.4});
  save_embeddings(path("bare.emb"), bare);
  EXPECT_EQ(run("eval --in " + path("bare.emb")), 1);
  EXPECT_EQ(run("project --mode l2 --in " + path("bare.emb") + " --out " + path("bare2.emb")), 1);
}

TEST(Cli, TrainIsByteIdenticalAndReplayable) {
  ASSERT_EQ(run(kTrain + "--out " + path("a.emb")), 0);
  ASSERT_EQ(run(kTrain + "--out " + path("b.emb")), 0);
  EXPECT_EQ(slurp("a.emb"), slurp("b.emb"));
  EXPECT_EQ(slurp("a.emb.log.csv"), slurp("b.emb.log.csv"));
  EXPECT_FALSE(slurp("a.emb").empty());
  ASSERT_EQ(run("train --manifest " + path("a.emb.manifest.json") + " --out " + path("c.emb")), 0);
  EXPECT_EQ(slurp("a.emb"), slurp("c.emb"));
  EXPECT_EQ(run("train --manifest " + path("a.emb.manifest.json") + " --seed 3 --out " + path("d.emb")), 2);
}

TEST(Cli, QuantizeGrid8HalvesCliffordDimension) {
  ASSERT_EQ(run(kTrain + "--out " + path("q.emb")), 0);
  ASSERT_EQ(run("quantize --config grid8 --in " + path("q.emb") + " --out " + path("q.codes")), 0);
  const StoredSet s = load_stored(path("q.codes"));
  ASSERT_TRUE(std::holds_alternative<CodeSet>(s));
  EXPECT_EQ(std::get<CodeSet>(s).dim, 4u);
  EXPECT_EQ(run("quantize --config pq4x2 --in " + path("q.emb") + " --out " + path("p.codes")), 2);
  EXPECT_EQ(run("quantize --config grid8 --codebook x --in " + path("q.emb") + " --out " + path("p.codes")), 2);
  ASSERT_EQ(run("quantize --config pq4x2 --seed 1 --in " + path("q.emb") + " --out " + path("p1.codes") +
                " --codebook " + path("p1.cb")),
            0);
  ASSERT_EQ(run("quantize --config pq4x2 --seed 1 --in " + path("q.emb") + " --out " + path("p2.codes") +
                " --codebook " + path("p2.cb")),
            0);
  EXPECT_EQ(slurp("p1.codes"), slurp("p2.codes"));
  EXPECT_EQ(slurp("p1.cb"), slurp("p2.cb"));
}

TEST(Cli, SearchEvalSimulateDeterministic) {
  ASSERT_EQ(run(kTrain + "--out " + path("s.emb") + " --support-out " + path("s_support.emb")), 0);
  ASSERT_EQ(run("search --index " + path("s_support.emb") + " --queries " + path("s.emb") + " --k 3 --metric cosine",
                "search1.csv"),
            0);
  ASSERT_EQ(run("search --index " + path("s_support.emb") + " --queries " + path("s.emb") + " --k 3 --metric cosine",
                "search2.csv"),
            0);
  EXPECT_EQ(slurp("search1.csv"), slurp("search2.csv"));
  EXPECT_EQ(slurp("search1.csv").rfind("query,rank,id,distance\n", 0), 0u);

  for (const char* f : {"e1.csv", "e2.csv"}) {
    ASSERT_EQ(run("eval --in " + path("s.emb") + " --quant grid8 --manifest " + path("s.emb.manifest.json"), f), 0);
  }
  EXPECT_EQ(slurp("e1.csv"), slurp("e2.csv"));
  EXPECT_NE(slurp("e1.csv").find("torusN,8,0,grid8,precision_at_1_int_l1,"), std::string::npos);
  for (const char* f : {"f1.json", "f2.json"}) {
    ASSERT_EQ(run("eval --in " + path("s.emb") + " --support " + path("s_support.emb") +
                      " --few-shot 5 --seed 2 --format json",
                  f),
              0);
  }
  EXPECT_EQ(slurp("f1.json"), slurp("f2.json"));
  EXPECT_EQ(run("eval --in " + path("s.emb") + " --few-shot 5"), 2);

  for (const char* p : {"sim1", "sim2"}) {
    ASSERT_EQ(run("simulate-distances --geometry flat-torus --dims 2,16 --pairs 500 --seed 3 --out-prefix " + path(p),
                  std::string(p) + ".csv"),
              0);
  }
  EXPECT_EQ(slurp("sim1_flat-torus_flat-l1_D16.csv"), slurp("sim2_flat-torus_flat-l1_D16.csv"));
  EXPECT_FALSE(slurp("sim1_flat-torus_flat-l2_D2.csv").empty());
}
