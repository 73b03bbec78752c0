//
// Copyright 2026 The Perturbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "perturbench/error.h"

namespace perturbench {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidPermutation: return "InvalidPermutation";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kEmptyQuestion: return "EmptyQuestion";
    case ErrorCode::kTypeMismatch: return "TypeMismatch";
    case ErrorCode::kGenerationFailed: return "GenerationFailed";
    case ErrorCode::kTooManyVariants: return "TooManyVariants";
    case ErrorCode::kAttackSourceUnavailable: return "AttackSourceUnavailable";
    case ErrorCode::kGroupInconsistent: return "GroupInconsistent";
    case ErrorCode::kTransportError: return "TransportError";
    case ErrorCode::kEndpointError: return "EndpointError";
    case ErrorCode::kNameTaken: return "NameTaken";
    case ErrorCode::kUnknownModel: return "UnknownModel";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kPairingError: return "PairingError";
    case ErrorCode::kInsufficientVariants: return "InsufficientVariants";
    case ErrorCode::kAnnotationGap: return "AnnotationGap";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace perturbench
