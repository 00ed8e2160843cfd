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

#include "pseudoshot/array_io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pseudoshot/error.h"

namespace pseudoshot {
namespace {

static_assert(std::endian::native == std::endian::little,
              "array files are written in native little-endian order");

void WriteShapeHeader(std::ostream& out, const Shape& shape) {
  out << shape.size();
  for (int64_t d : shape) out << ' ' << d;
  out << '\n';
}

Shape ReadShape(std::istream& in, const std::filesystem::path& path) {
  int64_t rank = -1;
  if (!(in >> rank) || rank < 0 || rank > 8) {
    throw FormatError("bad rank in array header of '" + path.string() + "'");
  }
  Shape shape(static_cast<size_t>(rank));
  for (auto& d : shape) {
    if (!(in >> d) || d < 0) throw FormatError("bad dimension in '" + path.string() + "'");
  }
  if (in.get() != '\n') throw FormatError("malformed array header in '" + path.string() + "'");
  return shape;
}

void WriteRaw(std::ostream& out, const Tensor& t) {
  out.write(reinterpret_cast<const char*>(t.raw()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor ReadRaw(std::istream& in, Shape shape, const std::filesystem::path& path) {
  Tensor t(std::move(shape));
  in.read(reinterpret_cast<char*>(t.raw()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(t.size() * sizeof(double))) {
    throw FormatError("truncated array data in '" + path.string() + "'");
  }
  return t;
}

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream OpenIn(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  return in;
}

}  // namespace

void WriteArrayFile(const std::filesystem::path& path, const Tensor& t) {
  auto out = OpenOut(path);
  out << "PSARRAY 1 f64 ";
  WriteShapeHeader(out, t.shape());
  WriteRaw(out, t);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Tensor ReadArrayFile(const std::filesystem::path& path) {
  auto in = OpenIn(path);
  std::string magic, dtype;
  int version = 0;
  in >> magic >> version >> dtype;
  if (magic != "PSARRAY" || version != 1 || dtype != "f64") {
    throw FormatError("'" + path.string() + "' is not a PSARRAY v1 f64 file");
  }
  Shape shape = ReadShape(in, path);
  return ReadRaw(in, std::move(shape), path);
}

void WriteNamedArrays(const std::filesystem::path& path, const NamedArrays& arrays) {
  auto out = OpenOut(path);
  out << "PSNAMED 1 " << arrays.size() << '\n';
  for (const auto& [name, t] : arrays) {
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
      throw ValueError("array name '" + name + "' must be non-empty without whitespace");
    }
    out << name << ' ';
    WriteShapeHeader(out, t.shape());
    WriteRaw(out, t);
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

NamedArrays ReadNamedArrays(const std::filesystem::path& path) {
  auto in = OpenIn(path);
  std::string magic;
  int version = 0;
  int64_t count = -1;
  in >> magic >> version >> count;
  if (magic != "PSNAMED" || version != 1 || count < 0 || in.get() != '\n') {
    throw FormatError("'" + path.string() + "' is not a PSNAMED v1 file");
  }
  NamedArrays out;
  for (int64_t i = 0; i < count; ++i) {
    std::string name;
    if (!(in >> name)) throw FormatError("truncated entry list in '" + path.string() + "'");
    Shape shape = ReadShape(in, path);
    out.emplace_back(std::move(name), ReadRaw(in, std::move(shape), path));
  }
  return out;
}

void WritePpm(const std::filesystem::path& path, const Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.dim(0) != 3) {
    throw ShapeError("PPM expects (3, H, W), got " + ShapeToString(rgb.shape()));
  }
  const int64_t h = rgb.dim(1), w = rgb.dim(2);
  auto out = OpenOut(path);
  out << "P6\n" << w << ' ' << h << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(w * 3));
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      for (int64_t c = 0; c < 3; ++c) {
        const double v = std::clamp(rgb.at(c, y, x), 0.0, 1.0);
        row[static_cast<size_t>(x * 3 + c)] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Tensor ReadPpm(const std::filesystem::path& path) {
  auto in = OpenIn(path);
  std::string magic;
  int64_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255 || in.get() == EOF) {
    throw FormatError("'" + path.string() + "' is not an 8-bit binary PPM");
  }
  std::vector<unsigned char> bytes(static_cast<size_t>(w * h * 3));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw FormatError("truncated PPM '" + path.string() + "'");
  }
  Tensor t({3, h, w});
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      for (int64_t c = 0; c < 3; ++c) {
        t.at(c, y, x) = bytes[static_cast<size_t>((y * w + x) * 3 + c)] / 255.0;
      }
    }
  }
  return t;
}

Tensor ReadImageFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read image '" + path.string() + "'");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  in.close();
  if (magic[0] == 'P' && magic[1] == '6') return ReadPpm(path);
  if (magic[0] == 'P' && magic[1] == 'S') return ReadArrayFile(path);
  throw FormatError("unrecognised image format in '" + path.string() + "'");
}

}  // namespace pseudoshot
