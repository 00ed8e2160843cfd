// Copyright 2026 The Pseudoshot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pseudoshot/array_io.h"
#include "pseudoshot/dataset.h"
#include "pseudoshot/error.h"
#include "test_util.h"

namespace pseudoshot {
namespace {

SynthConfig Small() {
  SynthConfig cfg;
  cfg.branching = 2;
  cfg.depth = 2;
  cfg.samples_per_class = 4;
  return cfg;
}

double PearsonCorrelation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Per-class mean image with the dataset mean image removed, which takes out
// the shared background.
std::map<ClassId, std::vector<double>> CentredClassMeans(const DatasetStore& store) {
  std::map<ClassId, std::vector<double>> means;
  const int64_t size = ShapeSize(store.image_shape());
  std::vector<double> global(static_cast<size_t>(size), 0.0);
  for (const auto& [c, images] : store.by_class()) {
    std::vector<double> m(static_cast<size_t>(size), 0.0);
    for (const Tensor& img : images) {
      for (int64_t i = 0; i < size; ++i) m[static_cast<size_t>(i)] += img[i] / static_cast<double>(images.size());
    }
    for (int64_t i = 0; i < size; ++i) global[static_cast<size_t>(i)] += m[static_cast<size_t>(i)];
    means[c] = std::move(m);
  }
  for (double& g : global) g /= static_cast<double>(means.size());
  for (auto& [c, m] : means) {
    for (size_t i = 0; i < m.size(); ++i) m[i] -= global[i];
  }
  return means;
}

double VectorCosine(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    d += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return d / std::sqrt(na * nb);
}

TEST(GenerateSynthetic, CountsClassesAndImages) {
  const SyntheticData d = GenerateSynthetic(Small(), 1);
  EXPECT_EQ(d.taxonomy.size(), 7u);
  EXPECT_EQ(d.store.NumClasses(), 7u);
  EXPECT_EQ(d.store.TotalImages(), 28u);
  EXPECT_EQ(d.embeddings.size(), 7u);
  EXPECT_EQ(d.store.image_shape(), (Shape{3, 16, 16}));
}

TEST(GenerateSynthetic, SameSeedIsBitIdentical) {
  const SyntheticData a = GenerateSynthetic(Small(), 42);
  const SyntheticData b = GenerateSynthetic(Small(), 42);
  EXPECT_TRUE(a.store == b.store);
  EXPECT_EQ(TaxonomyToString(a.taxonomy), TaxonomyToString(b.taxonomy));
  const SyntheticData c = GenerateSynthetic(Small(), 43);
  EXPECT_FALSE(a.store == c.store);
}

TEST(GenerateSynthetic, PixelRangeAndUnitEmbeddings) {
  const SyntheticData d = GenerateSynthetic(SynthConfig{}, 2);
  for (const auto& [c, images] : d.store.by_class()) {
    for (const Tensor& img : images) {
      EXPECT_GE(img.Min(), 0.0);
      EXPECT_LE(img.Max(), 1.0);
    }
    double n = 0.0;
    for (double x : d.embeddings.Get(c)) n += x * x;
    EXPECT_NEAR(n, 1.0, 1e-12);
  }
}

TEST(GenerateSynthetic, PatchOriginsStayInsideTheImage) {
  const SynthConfig cfg;
  const SyntheticData d = GenerateSynthetic(cfg, 4);
  const int patch = static_cast<int>(std::lround(cfg.image_side * std::sqrt(cfg.patch_fraction)));
  for (const auto& [c, images] : d.store.by_class()) {
    for (int i = 0; i < static_cast<int>(images.size()); ++i) {
      const auto origin = d.store.PatchOrigin({c, i});
      ASSERT_TRUE(origin.has_value());
      EXPECT_GE(origin->first, 0);
      EXPECT_LE(origin->first + patch, cfg.image_side);
      EXPECT_GE(origin->second, 0);
      EXPECT_LE(origin->second + patch, cfg.image_side);
    }
  }
}

TEST(GenerateSynthetic, SiblingsLookMoreAlikeThanDistantClasses) {
  const SyntheticData d = GenerateSynthetic(SynthConfig{}, 5);
  const auto means = CentredClassMeans(d.store);
  const std::vector<ClassId> leaves = d.taxonomy.Leaves();
  Rng rng(9);
  std::uniform_int_distribution<size_t> pick(0, leaves.size() - 1);
  double sibling = 0.0, distant = 0.0;
  int ns = 0, nd = 0;
  while (ns < 100 || nd < 100) {
    const ClassId& a = leaves[pick(rng)];
    const ClassId& b = leaves[pick(rng)];
    if (a == b) continue;
    const double sim = VectorCosine(means.at(a), means.at(b));
    if (d.taxonomy.Parent(a) == d.taxonomy.Parent(b)) {
      if (ns < 100) sibling += sim, ++ns;
    } else if (d.taxonomy.Ancestor(a, PruneLevel(2)) != d.taxonomy.Ancestor(b, PruneLevel(2))) {
      if (nd < 100) distant += sim, ++nd;
    }
  }
  EXPECT_GT(sibling / ns, distant / nd);
}

TEST(GenerateSynthetic, SemanticAndVisualSimilarityCorrelate) {
  const SyntheticData d = GenerateSynthetic(SynthConfig{}, 6);
  const auto means = CentredClassMeans(d.store);
  const std::vector<ClassId> nodes = d.taxonomy.nodes();
  Rng rng(10);
  std::uniform_int_distribution<size_t> pick(0, nodes.size() - 1);
  std::vector<double> semantic, visual;
  while (semantic.size() < 2000) {
    const ClassId& a = nodes[pick(rng)];
    const ClassId& b = nodes[pick(rng)];
    if (a == b) continue;
    semantic.push_back(Cosine(d.embeddings.Get(a), d.embeddings.Get(b)));
    visual.push_back(VectorCosine(means.at(a), means.at(b)));
  }
  EXPECT_GT(PearsonCorrelation(semantic, visual), 0.3);
}

TEST(SynthConfig, InvalidValuesAreConfigErrors) {
  SynthConfig cfg;
  cfg.branching = 0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.pixel_noise = 0.0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.patch_fraction = 1.5;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.depth = 20;
  EXPECT_THROW(GenerateSynthetic(cfg, 1), ConfigError);
}

TEST(DatasetStore, RejectsBadImages) {
  DatasetStore store(Shape{3, 2, 2});
  EXPECT_THROW(store.Add("a", Tensor({3, 2, 3}, 0.5)), FormatError);
  EXPECT_THROW(store.Add("a", Tensor({3, 2, 2}, 1.5)), ValueError);
  EXPECT_THROW(store.ImagesOf("missing"), LookupError);
}

TEST(LoadManifest, TwoImagesOfOneClass) {
  const auto dir = testing_util::TempDir();
  WriteArrayFile(dir / "x.psa", Tensor({3, 2, 2}, 0.25));
  WriteArrayFile(dir / "y.psa", Tensor({3, 2, 2}, 0.75));
  std::istringstream manifest("cat\tx.psa\ncat\ty.psa\n");
  const DatasetStore store = ParseManifest(manifest, dir, ImageLoader());
  EXPECT_EQ(store.NumClasses(), 1u);
  EXPECT_EQ(store.NumImages("cat"), 2);
  EXPECT_DOUBLE_EQ(store.Image({"cat", 1})[0], 0.75);
}

TEST(LoadManifest, MissingFileNamesThePath) {
  const auto dir = testing_util::TempDir();
  std::istringstream manifest("cat\tnot_there.psa\n");
  try {
    ParseManifest(manifest, dir, ImageLoader());
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("not_there.psa"), std::string::npos) << e.what();
  }
}

TEST(LoadManifest, ShapeMismatchIsAFormatError) {
  const auto dir = testing_util::TempDir();
  WriteArrayFile(dir / "x.psa", Tensor({3, 2, 2}, 0.25));
  WriteArrayFile(dir / "y.psa", Tensor({3, 4, 4}, 0.25));
  std::istringstream manifest("a\tx.psa\nb\ty.psa\n");
  EXPECT_THROW(ParseManifest(manifest, dir, ImageLoader()), FormatError);
}

TEST(LoadManifest, ExportedSyntheticDataRoundTrips) {
  const auto dir = testing_util::TempDir();
  const SyntheticData d = GenerateSynthetic(Small(), 8);
  ExportSynthetic(d, dir);
  const DatasetStore back = LoadManifestFile(dir / "manifest.tsv");
  ASSERT_EQ(back.NumClasses(), d.store.NumClasses());
  for (const auto& [c, images] : d.store.by_class()) {
    for (int i = 0; i < static_cast<int>(images.size()); ++i) {
      EXPECT_LE(MaxAbsDiff(back.Image({c, i}), images[static_cast<size_t>(i)]), 1e-12);
    }
  }
  EXPECT_EQ(LoadTaxonomyFile((dir / "taxonomy.tsv").string()).size(), d.taxonomy.size());
  EXPECT_EQ(LoadEmbeddingsFile((dir / "embeddings.tsv").string()).size(), d.embeddings.size());
}

TEST(LoadManifest, PpmImagesAreDecoded) {
  const auto dir = testing_util::TempDir();
  Tensor rgb({3, 2, 2}, 0.0);
  rgb[0] = 1.0;
  WritePpm(dir / "a.ppm", rgb);
  std::istringstream manifest("k\ta.ppm\n");
  const DatasetStore store = ParseManifest(manifest, dir, ImageLoader());
  EXPECT_LE(MaxAbsDiff(store.Image({"k", 0}), rgb), 1.0 / 255.0);
}

DatasetStore TenImageStore() {
  DatasetStore store(Shape{3, 1, 1});
  for (int i = 0; i < 10; ++i) store.Add("c", Tensor({3, 1, 1}, i / 10.0));
  return store;
}

TEST(SampleImages, AllImagesGiveAPermutation) {
  const DatasetStore store = TenImageStore();
  Rng rng(3);
  std::vector<int> idx = SampleImageIndices(store, "c", 10, rng);
  std::sort(idx.begin(), idx.end());
  std::vector<int> all(10);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(idx, all);
  EXPECT_EQ(SampleImages(store, "c", 10, rng).size(), 10u);
}

TEST(SampleImages, SingleDrawsAreUniform) {
  const DatasetStore store = TenImageStore();
  Rng rng(4);
  std::vector<int> counts(10, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) counts[static_cast<size_t>(SampleImageIndices(store, "c", 1, rng)[0])]++;
  // Binomial(10000, 0.1): sd = 30.
  for (int c : counts) EXPECT_LT(std::abs(c - draws / 10), 5 * 30);
}

TEST(SampleImages, FixedSeedIsDeterministic) {
  const DatasetStore store = TenImageStore();
  Rng a(77), b(77);
  EXPECT_EQ(SampleImageIndices(store, "c", 4, a), SampleImageIndices(store, "c", 4, b));
}

TEST(SampleImages, OversizedRequestFallsBackToReplacement) {
  const DatasetStore store = TenImageStore();
  Rng rng(5);
  const std::vector<int> idx = SampleImageIndices(store, "c", 25, rng);
  EXPECT_EQ(idx.size(), 25u);
  EXPECT_EQ(std::set<int>(idx.begin(), idx.end()).size(), 10u);
  EXPECT_THROW(SampleImageIndices(store, "nope", 1, rng), LookupError);
}

}  // namespace
}  // namespace pseudoshot
