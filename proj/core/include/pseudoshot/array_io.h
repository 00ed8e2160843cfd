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

#ifndef PSEUDOSHOT_ARRAY_IO_H_
#define PSEUDOSHOT_ARRAY_IO_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pseudoshot/tensor.h"

namespace pseudoshot {

// Raw array file: an ASCII header line
//   PSARRAY 1 f64 <rank> <d0> ... <dn>\n
// followed by the values as little-endian IEEE-754 doubles. Round trips
// bit-exactly.
void WriteArrayFile(const std::filesystem::path& path, const Tensor& t);
Tensor ReadArrayFile(const std::filesystem::path& path);

// Named-array container used for parameter checkpoints:
//   PSNAMED 1 <count>\n
//   then per entry: <name> <rank> <d0> ... <dn>\n<raw doubles>
using NamedArrays = std::vector<std::pair<std::string, Tensor>>;
void WriteNamedArrays(const std::filesystem::path& path, const NamedArrays& arrays);
NamedArrays ReadNamedArrays(const std::filesystem::path& path);

// Binary PPM (P6), 8 bits per channel. `rgb` is (3, H, W) with values in [0,1].
void WritePpm(const std::filesystem::path& path, const Tensor& rgb);
Tensor ReadPpm(const std::filesystem::path& path);

// Loads either format by sniffing the magic bytes.
Tensor ReadImageFile(const std::filesystem::path& path);

}  // namespace pseudoshot

#endif  // PSEUDOSHOT_ARRAY_IO_H_
