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

#include "pseudoshot/dataset.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>

#include "pseudoshot/array_io.h"
#include "pseudoshot/error.h"

namespace pseudoshot {

DatasetStore::DatasetStore(Shape image_shape) : image_shape_(std::move(image_shape)) {
  if (image_shape_.size() != 3 || image_shape_[0] != 3 || image_shape_[1] < 1 ||
      image_shape_[2] < 1) {
    throw ShapeError("image shape must be (3, H, W), got " + ShapeToString(image_shape_));
  }
}

void DatasetStore::Add(const ClassId& class_id, Tensor pixels) {
  if (image_shape_.empty()) *this = DatasetStore(pixels.shape());
  if (pixels.shape() != image_shape_) {
    throw FormatError("image of class '" + class_id + "' has shape " +
                      ShapeToString(pixels.shape()) + ", store expects " +
                      ShapeToString(image_shape_));
  }
  for (double v : pixels.data()) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw ValueError("image of class '" + class_id + "' has pixel outside [0, 1]");
    }
  }
  images_[class_id].push_back(std::move(pixels));
}

const std::vector<Tensor>& DatasetStore::ImagesOf(const ClassId& c) const {
  auto it = images_.find(c);
  if (it == images_.end()) throw LookupError("no images for class '" + c + "'");
  return it->second;
}

const Tensor& DatasetStore::Image(const ImageRef& ref) const {
  const auto& imgs = ImagesOf(ref.class_id);
  if (ref.index < 0 || ref.index >= static_cast<int>(imgs.size())) {
    throw LookupError("image index " + std::to_string(ref.index) + " out of range for class '" +
                      ref.class_id + "'");
  }
  return imgs[static_cast<size_t>(ref.index)];
}

ClassSet DatasetStore::Classes() const {
  ClassSet out;
  for (const auto& [c, _] : images_) out.insert(out.end(), c);
  return out;
}

size_t DatasetStore::TotalImages() const {
  size_t n = 0;
  for (const auto& [_, v] : images_) n += v.size();
  return n;
}

void DatasetStore::SetPatchOrigin(const ImageRef& ref, int row, int col) {
  patch_origins_[ref] = {row, col};
}

std::optional<std::pair<int, int>> DatasetStore::PatchOrigin(const ImageRef& ref) const {
  auto it = patch_origins_.find(ref);
  if (it == patch_origins_.end()) return std::nullopt;
  return it->second;
}

void SynthConfig::Validate() const {
  if (branching < 1 || depth < 1 || samples_per_class < 1 || image_side < 1 || embed_dim < 1) {
    throw ConfigError("synth: branching, depth, samples_per_class, image_side and embed_dim "
                      "must be positive");
  }
  if (!(semantic_drift > 0.0) || !(pixel_noise > 0.0)) {
    throw ConfigError("synth: semantic_drift and pixel_noise must be positive");
  }
  if (!(patch_fraction > 0.0) || patch_fraction > 1.0) {
    throw ConfigError("synth: patch_fraction must lie in (0, 1]");
  }
  if (!(patch_contrast > 0.0)) throw ConfigError("synth: patch_contrast must be positive");
  if (patch_jitter < 0) throw ConfigError("synth: patch_jitter must be non-negative");
  double leaves = std::pow(static_cast<double>(branching), depth);
  if (leaves > max_leaves) {
    throw ConfigError("synth: branching^depth = " + std::to_string(static_cast<int64_t>(leaves)) +
                      " exceeds max_leaves = " + std::to_string(max_leaves));
  }
}

std::string SyntheticNodeId(const std::vector<int>& path) {
  std::string id = "n";
  for (int p : path) id += "_" + std::to_string(p);
  return id;
}

namespace {

void Normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
}

// Box-blurred Gaussian field around 0.5; shared by every image.
Tensor MakeBackground(int side, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor raw({3, side, side});
  for (double& v : raw.vec()) v = gauss(rng);
  Tensor bg({3, side, side});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        double s = 0.0;
        int n = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || xx < 0 || yy >= side || xx >= side) continue;
            s += raw.at(c, yy, xx);
            ++n;
          }
        }
        bg.at(c, y, x) = std::clamp(0.5 + 0.1 * s / n, 0.0, 1.0);
      }
    }
  }
  return bg;
}

// Gaussian noise box-blurred twice and rescaled to unit variance, so class
// patterns stay correlated under small shifts.
Tensor SmoothField(int side, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor f({3, side, side});
  for (double& v : f.vec()) v = gauss(rng);
  for (int pass = 0; pass < 2; ++pass) {
    Tensor blurred({3, side, side});
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
          double s = 0.0;
          int n = 0;
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int yy = y + dy, xx = x + dx;
              if (yy < 0 || xx < 0 || yy >= side || xx >= side) continue;
              s += f.at(c, yy, xx);
              ++n;
            }
          }
          blurred.at(c, y, x) = s / n;
        }
      }
    }
    f = std::move(blurred);
  }
  double ss = 0.0;
  for (double v : f.data()) ss += v * v;
  const double scale = ss > 0.0 ? std::sqrt(static_cast<double>(f.size()) / ss) : 1.0;
  for (double& v : f.vec()) v *= scale;
  return f;
}

}  // namespace

SyntheticData GenerateSynthetic(const SynthConfig& cfg, uint64_t seed) {
  cfg.Validate();
  const int side = cfg.image_side;
  const int patch = std::clamp(
      static_cast<int>(std::lround(side * std::sqrt(cfg.patch_fraction))), 1, side);
  const int dim = cfg.embed_dim;

  // Breadth-first node list with child-index paths.
  struct Node {
    std::vector<int> path;
    int parent = -1;
  };
  std::vector<Node> nodes{{{}, -1}};
  for (size_t head = 0; head < nodes.size(); ++head) {
    if (static_cast<int>(nodes[head].path.size()) >= cfg.depth) continue;
    for (int b = 0; b < cfg.branching; ++b) {
      Node child{nodes[head].path, static_cast<int>(head)};
      child.path.push_back(b);
      nodes.push_back(std::move(child));
    }
  }

  std::vector<std::pair<ClassId, ClassId>> edges;
  std::vector<ClassId> ids;
  ids.reserve(nodes.size());
  for (const Node& n : nodes) ids.push_back(SyntheticNodeId(n.path));
  for (size_t i = 1; i < nodes.size(); ++i) {
    edges.emplace_back(ids[static_cast<size_t>(nodes[i].parent)], ids[i]);
  }

  SyntheticData out{Taxonomy::FromEdges(edges), EmbeddingTable(dim),
                    DatasetStore({3, side, side})};

  // Drift is per unit vector, so the parent-child cosine is about
  // 1 / sqrt(1 + drift^2) regardless of the dimension.
  const double drift = cfg.semantic_drift / std::sqrt(static_cast<double>(dim));
  Rng embed_rng = MakeStream(seed, 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> emb(nodes.size(), std::vector<double>(static_cast<size_t>(dim)));
  for (size_t i = 0; i < nodes.size(); ++i) {
    for (int d = 0; d < dim; ++d) {
      const double base = nodes[i].parent < 0 ? 0.0 : emb[static_cast<size_t>(nodes[i].parent)][static_cast<size_t>(d)];
      const double noise = gauss(embed_rng);
      emb[i][static_cast<size_t>(d)] = nodes[i].parent < 0 ? noise : base + drift * noise;
    }
    Normalize(emb[i]);
    out.embeddings.Add(ids[i], emb[i]);
  }

  Rng visual_rng = MakeStream(seed, 2);
  const Tensor background = MakeBackground(side, visual_rng);
  const int patch_len = 3 * patch * patch;
  // projection[r * dim + d]: pixel r of the smooth field for embedding axis d.
  std::vector<double> projection(static_cast<size_t>(patch_len * dim));
  for (int d = 0; d < dim; ++d) {
    const Tensor field = SmoothField(patch, visual_rng);
    for (int r = 0; r < patch_len; ++r) projection[static_cast<size_t>(r * dim + d)] = field[r];
  }

  for (size_t i = 0; i < nodes.size(); ++i) {
    std::vector<double> pattern(static_cast<size_t>(patch_len));
    for (int r = 0; r < patch_len; ++r) {
      double s = 0.0;
      for (int d = 0; d < dim; ++d) s += projection[static_cast<size_t>(r * dim + d)] * emb[i][static_cast<size_t>(d)];
      pattern[static_cast<size_t>(r)] = 0.5 + cfg.patch_contrast * s;
    }
    Rng image_rng = MakeStream(seed, 3, i);
    const int centre = (side - patch) / 2;
    const int jitter = std::min(cfg.patch_jitter, centre);
    std::uniform_int_distribution<int> where(centre - jitter, std::min(side - patch, centre + jitter));
    for (int s = 0; s < cfg.samples_per_class; ++s) {
      const int row = where(image_rng);
      const int col = where(image_rng);
      Tensor img = background;
      for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < patch; ++y) {
          for (int x = 0; x < patch; ++x) {
            img.at(c, row + y, col + x) = pattern[static_cast<size_t>((c * patch + y) * patch + x)];
          }
        }
      }
      for (double& v : img.vec()) v = std::clamp(v + cfg.pixel_noise * gauss(image_rng), 0.0, 1.0);
      out.store.Add(ids[i], std::move(img));
      out.store.SetPatchOrigin({ids[i], s}, row, col);
    }
  }
  return out;
}

DatasetStore ParseManifest(std::istream& manifest, const std::filesystem::path& base_dir,
                           const ImageLoader& loader) {
  const ImageLoader& load = loader ? loader : ImageLoader(ReadImageFile);
  DatasetStore store;
  std::string line;
  int lineno = 0;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw ParseError("manifest line " + std::to_string(lineno) + ": expected 'class_id<TAB>path'");
    }
    std::filesystem::path p = line.substr(tab + 1);
    if (p.is_relative()) p = base_dir / p;
    if (!std::filesystem::exists(p)) throw IoError("image file not found: '" + p.string() + "'");
    Tensor img = load(p);
    try {
      store.Add(line.substr(0, tab), std::move(img));
    } catch (const FormatError& e) {
      throw FormatError("manifest line " + std::to_string(lineno) + " ('" + p.string() +
                        "'): " + e.what());
    }
  }
  if (store.NumClasses() == 0) throw FormatError("manifest lists no images");
  return store;
}

DatasetStore LoadManifestFile(const std::filesystem::path& path, const ImageLoader& loader) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  return ParseManifest(in, path.parent_path(), loader);
}

void ExportSynthetic(const SyntheticData& data, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (ec) throw IoError("cannot create '" + (out_dir / "images").string() + "': " + ec.message());
  {
    std::ofstream t(out_dir / "taxonomy.tsv");
    if (!t) throw IoError("cannot write '" + (out_dir / "taxonomy.tsv").string() + "'");
    WriteTaxonomy(data.taxonomy, t);
  }
  {
    std::ofstream e(out_dir / "embeddings.tsv");
    if (!e) throw IoError("cannot write '" + (out_dir / "embeddings.tsv").string() + "'");
    WriteEmbeddings(data.embeddings, e);
  }
  std::ofstream m(out_dir / "manifest.tsv");
  if (!m) throw IoError("cannot write '" + (out_dir / "manifest.tsv").string() + "'");
  for (const auto& [cls, images] : data.store.by_class()) {
    fs::create_directories(out_dir / "images" / cls, ec);
    if (ec) throw IoError("cannot create '" + (out_dir / "images" / cls).string() + "'");
    for (size_t i = 0; i < images.size(); ++i) {
      const fs::path rel = fs::path("images") / cls / (std::to_string(i) + ".psa");
      WriteArrayFile(out_dir / rel, images[i]);
      m << cls << '\t' << rel.generic_string() << '\n';
    }
  }
}

std::vector<int> SampleImageIndices(const DatasetStore& store, const ClassId& c, int k, Rng& rng) {
  const int n = store.NumImages(c);
  if (k < 0) throw ValueError("sample size must be non-negative");
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  const int take = std::min(k, n);
  for (int i = 0; i < take; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(pick(rng))]);
  }
  idx.resize(static_cast<size_t>(take));
  if (k > n) {
    spdlog::warn("class '{}' has {} images, {} requested; sampling the rest with replacement", c,
                 n, k);
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int i = n; i < k; ++i) idx.push_back(pick(rng));
  }
  return idx;
}

std::vector<LabeledImage> SampleImages(const DatasetStore& store, const ClassId& c, int k, Rng& rng) {
  std::vector<LabeledImage> out;
  for (int i : SampleImageIndices(store, c, k, rng)) out.push_back({c, store.Image({c, i})});
  return out;
}

}  // namespace pseudoshot
