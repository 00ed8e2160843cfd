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

#ifndef PSEUDOSHOT_DATASET_H_
#define PSEUDOSHOT_DATASET_H_

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pseudoshot/rng.h"
#include "pseudoshot/semantics.h"
#include "pseudoshot/taxonomy.h"
#include "pseudoshot/tensor.h"

namespace pseudoshot {

struct LabeledImage {
  ClassId class_id;
  Tensor pixels;  // (3, H, W) in [0, 1]
};

// Stable handle to one image of a store: position within its class list.
struct ImageRef {
  ClassId class_id;
  int index = 0;

  friend auto operator<=>(const ImageRef&, const ImageRef&) = default;
};

// Images grouped by class. Every class holds at least one image and all
// images share one shape.
class DatasetStore {
 public:
  DatasetStore() = default;
  explicit DatasetStore(Shape image_shape);

  // Validates shape, finiteness and the [0, 1] range.
  void Add(const ClassId& class_id, Tensor pixels);

  const Shape& image_shape() const { return image_shape_; }
  bool HasClass(const ClassId& c) const { return images_.count(c) > 0; }
  // Throws LookupError.
  const std::vector<Tensor>& ImagesOf(const ClassId& c) const;
  const Tensor& Image(const ImageRef& ref) const;
  int NumImages(const ClassId& c) const { return static_cast<int>(ImagesOf(c).size()); }
  ClassSet Classes() const;
  size_t NumClasses() const { return images_.size(); }
  size_t TotalImages() const;

  const std::map<ClassId, std::vector<Tensor>>& by_class() const { return images_; }

  // Ground-truth top-left corner (row, col) of the discriminative patch.
  // Only populated by the synthetic generator.
  void SetPatchOrigin(const ImageRef& ref, int row, int col);
  std::optional<std::pair<int, int>> PatchOrigin(const ImageRef& ref) const;

  friend bool operator==(const DatasetStore& a, const DatasetStore& b) {
    return a.image_shape_ == b.image_shape_ && a.images_ == b.images_;
  }

 private:
  Shape image_shape_;
  std::map<ClassId, std::vector<Tensor>> images_;
  std::map<ImageRef, std::pair<int, int>> patch_origins_;
};

struct SynthConfig {
  int branching = 2;
  int depth = 7;
  int samples_per_class = 20;
  int image_side = 16;
  int embed_dim = 16;
  double semantic_drift = 0.6;
  double pixel_noise = 0.1;
  double patch_fraction = 0.25;
  double patch_contrast = 0.35;
  // Maximum offset (pixels) of the patch from the image centre, per axis.
  int patch_jitter = 2;
  int max_leaves = 4096;

  void Validate() const;
};

struct SyntheticData {
  Taxonomy taxonomy;
  EmbeddingTable embeddings;
  DatasetStore store;
};

// Uniform tree of the given branching and depth; every node is a class with
// images. Node embeddings drift from their parent's, and each class's image
// patch is a fixed linear projection of its embedding, so semantic and visual
// similarity are correlated. Fully determined by `seed`.
SyntheticData GenerateSynthetic(const SynthConfig& cfg, uint64_t seed);

// Node id for the path of child indices from the root ("n", "n_0", "n_0_1", ...).
std::string SyntheticNodeId(const std::vector<int>& path);

using ImageLoader = std::function<Tensor(const std::filesystem::path&)>;

// `class_id<TAB>path` per line. Relative paths resolve against `base_dir`.
DatasetStore ParseManifest(std::istream& manifest, const std::filesystem::path& base_dir,
                           const ImageLoader& loader);
DatasetStore LoadManifestFile(const std::filesystem::path& path,
                              const ImageLoader& loader = ImageLoader());

// Writes taxonomy.tsv, embeddings.tsv, manifest.tsv and images/<class>/<i>.psa.
void ExportSynthetic(const SyntheticData& data, const std::filesystem::path& out_dir);

// k image indices of class c, uniformly without replacement. When k exceeds
// the class size every image is used once and the remainder is drawn with
// replacement (logged).
std::vector<int> SampleImageIndices(const DatasetStore& store, const ClassId& c, int k, Rng& rng);
std::vector<LabeledImage> SampleImages(const DatasetStore& store, const ClassId& c, int k, Rng& rng);

}  // namespace pseudoshot

#endif  // PSEUDOSHOT_DATASET_H_
