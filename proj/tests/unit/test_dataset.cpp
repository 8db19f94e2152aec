#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "normclash/dataset.hpp"
#include "normclash/defenses.hpp"
#include "normclash/error.hpp"

using namespace normclash;
namespace fs = std::filesystem;

namespace {

void put_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("normclash_ds_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Writes an image file with the given magic and dims and `bytes` payload.
void write_images(const fs::path& p, std::uint32_t magic, std::uint32_t n, std::uint32_t r, std::uint32_t c,
                  const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  put_be32(out, magic);
  put_be32(out, n);
  put_be32(out, r);
  put_be32(out, c);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_labels(const fs::path& p, std::uint32_t magic, const std::vector<unsigned char>& labels) {
  std::ofstream out(p, std::ios::binary);
  put_be32(out, magic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

}  // namespace

TEST(Idx, ParsesHeaderAndScalesPixels) {
  TempDir dir;
  std::vector<unsigned char> px(3 * 2 * 2, 0);
  px[0] = 255;
  px[5] = 51;
  write_images(dir.path / "img", 0x803, 3, 2, 2, px);
  write_labels(dir.path / "lbl", 0x801, {0, 2, 1});
  const Dataset d = load_idx(dir.path / "img", dir.path / "lbl");
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.dim(), 4u);
  EXPECT_EQ(d.num_classes, 3u);
  EXPECT_EQ(d.inputs[0], 1.0);
  EXPECT_DOUBLE_EQ(d.inputs[5], 0.2);
  EXPECT_EQ(d.labels, (std::vector<int>{0, 2, 1}));
}

TEST(Idx, BadMagicReportsExpectedAndFound) {
  TempDir dir;
  write_images(dir.path / "img", 2049, 1, 1, 1, {0});
  write_labels(dir.path / "lbl", 0x801, {0});
  try {
    load_idx(dir.path / "img", dir.path / "lbl");
    FAIL();
  } catch (const FormatError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("2051"), std::string::npos) << m;
    EXPECT_NE(m.find("2049"), std::string::npos) << m;
  }
}

TEST(Idx, TruncatedAndMismatchedFilesAreRejected) {
  TempDir dir;
  write_images(dir.path / "short", 0x803, 2, 2, 2, {1, 2, 3});
  write_labels(dir.path / "lbl2", 0x801, {0, 1});
  EXPECT_THROW(load_idx(dir.path / "short", dir.path / "lbl2"), FormatError);
  write_images(dir.path / "img", 0x803, 2, 1, 1, {1, 2});
  write_labels(dir.path / "lbl3", 0x801, {0, 1, 1});
  EXPECT_THROW(load_idx(dir.path / "img", dir.path / "lbl3"), FormatError);
  EXPECT_THROW(load_idx(dir.path / "missing", dir.path / "lbl2"), FormatError);
}

TEST(Idx, SaveLoadRoundTrip) {
  TempDir dir;
  const Dataset a = make_blobs(50, 6, 3, 0.05, 2);
  save_idx(a, dir.path / "i", dir.path / "l", 2, 3);
  const Dataset b = load_idx(dir.path / "i", dir.path / "l");
  const Dataset c = load_idx(dir.path / "i", dir.path / "l");
  EXPECT_EQ(b.inputs, c.inputs);
  ASSERT_EQ(b.labels, a.labels);
  for (std::size_t i = 0; i < a.inputs.size(); ++i) EXPECT_NEAR(b.inputs[i], a.inputs[i], 0.5 / 255 + 1e-12);
}

TEST(Idx, DeskMnistFilesLoad) {
  const fs::path root = NORMCLASH_DATA_DIR "/mnist";
  if (!fs::exists(root / "eval-images-idx3-ubyte")) GTEST_SKIP() << "no MNIST files";
  const Dataset d = load_idx(root / "eval-images-idx3-ubyte", root / "eval-labels-idx1-ubyte");
  EXPECT_EQ(d.dim(), 784u);
  EXPECT_EQ(d.num_classes, 10u);
  EXPECT_NO_THROW(d.validate());
}

TEST(Blobs, SeededAndValid) {
  const Dataset a = make_blobs(100, 2, 2, 0.05, 7), b = make_blobs(100, 2, 2, 0.05, 7);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NO_THROW(a.validate());
  EXPECT_NE(make_blobs(100, 2, 2, 0.05, 8).inputs, a.inputs);
}

TEST(Blobs, PreconditionsAreEnforced) {
  EXPECT_THROW(make_blobs(100, 2, 2, 0.0, 7), std::invalid_argument);
  EXPECT_THROW(make_blobs(0, 2, 2, 0.05, 7), std::invalid_argument);
  EXPECT_THROW(make_blobs(10, 0, 2, 0.05, 7), std::invalid_argument);
  EXPECT_THROW(make_blobs(10, 2, 0, 0.05, 7), std::invalid_argument);
}

TEST(Blobs, LinearClassifierSeparatesThem) {
  const Dataset d = make_blobs(1000, 2, 2, 0.05, 7);
  DefenseSpec natural;
  natural.name = "natural";
  TrainConfig tc;
  tc.epochs = 20;
  tc.seed = 1;
  const auto r = train(d, ModelSpec{{2, 2}}, natural, tc);
  EXPECT_GE(accuracy(r.params, d), 0.99);
}

TEST(Batches, SizesAndPartition) {
  const auto idx = batch_indices(10, 4, 3, 0);
  ASSERT_EQ(idx.size(), 3u);
  EXPECT_EQ(idx[0].size(), 4u);
  EXPECT_EQ(idx[1].size(), 4u);
  EXPECT_EQ(idx[2].size(), 2u);
  std::multiset<std::size_t> all;
  for (const auto& b : idx) all.insert(b.begin(), b.end());
  EXPECT_EQ(all.size(), 10u);
  EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), 10u);
  EXPECT_EQ(*all.rbegin(), 9u);
}

TEST(Batches, DeterministicPerSeedAndEpoch) {
  EXPECT_EQ(batch_indices(100, 7, 3, 2), batch_indices(100, 7, 3, 2));
  EXPECT_NE(batch_indices(100, 7, 3, 2), batch_indices(100, 7, 3, 3));
  EXPECT_NE(batch_indices(100, 7, 3, 2), batch_indices(100, 7, 4, 2));
  EXPECT_THROW(batch_indices(10, 0, 1, 0), std::invalid_argument);
}

TEST(Batches, EveryBatchIsAValidDataset) {
  const Dataset d = make_blobs(53, 3, 4, 0.1, 1);
  for (const auto& b : batches(d, 8, 9, 1)) {
    Dataset part{b.inputs, b.labels, d.num_classes};
    EXPECT_NO_THROW(part.validate());
    for (std::size_t i = 0; i < b.indices.size(); ++i) EXPECT_EQ(b.labels[i], d.labels[b.indices[i]]);
  }
}
