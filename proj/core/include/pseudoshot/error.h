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

#ifndef PSEUDOSHOT_ERROR_H_
#define PSEUDOSHOT_ERROR_H_

#include <stdexcept>
#include <string>

namespace pseudoshot {

// Base class of every error raised by the library. The `kind()` string is
// what the CLI writes into its machine-readable error record.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

#define PSEUDOSHOT_DEFINE_ERROR(Name, tag)                           \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& message) : Error(tag, message) {} \
  }

PSEUDOSHOT_DEFINE_ERROR(ParseError, "parse");
PSEUDOSHOT_DEFINE_ERROR(StructureError, "structure");
PSEUDOSHOT_DEFINE_ERROR(LookupError, "lookup");
PSEUDOSHOT_DEFINE_ERROR(FormatError, "format");
PSEUDOSHOT_DEFINE_ERROR(ValueError, "value");
PSEUDOSHOT_DEFINE_ERROR(SelectionError, "selection");
PSEUDOSHOT_DEFINE_ERROR(ConfigError, "config");
PSEUDOSHOT_DEFINE_ERROR(IoError, "io");
PSEUDOSHOT_DEFINE_ERROR(SamplingError, "sampling");
PSEUDOSHOT_DEFINE_ERROR(EpisodeError, "episode");
PSEUDOSHOT_DEFINE_ERROR(ShapeError, "shape");
PSEUDOSHOT_DEFINE_ERROR(NumericError, "numeric");

#undef PSEUDOSHOT_DEFINE_ERROR

}  // namespace pseudoshot

#endif  // PSEUDOSHOT_ERROR_H_
