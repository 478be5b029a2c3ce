// Copyright 2026 The camodet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace camodet {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidBox,
  kMalformedJson,
  kMissingField,
  kUnknownCategory,
  kDuplicateId,
  kBoxOutOfImage,
  kIo,
  kUnsupportedFormat,
  kTooManyCrops,
  kEmptyPool,
  kEmptyDataset,
  kInternal,
};

std::string_view error_code_name(ErrorCode code);

// Every recoverable failure in the library is reported through this type. The
// CLI turns it into a single "error: <code>: <message>" line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace camodet
