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

#include "camodet/error.hpp"

namespace camodet {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kInvalidBox: return "invalid_box";
    case ErrorCode::kMalformedJson: return "malformed_json";
    case ErrorCode::kMissingField: return "missing_field";
    case ErrorCode::kUnknownCategory: return "unknown_category";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kBoxOutOfImage: return "box_out_of_image";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kUnsupportedFormat: return "unsupported_format";
    case ErrorCode::kTooManyCrops: return "too_many_crops";
    case ErrorCode::kEmptyPool: return "empty_pool";
    case ErrorCode::kEmptyDataset: return "empty_dataset";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

}  // namespace camodet
