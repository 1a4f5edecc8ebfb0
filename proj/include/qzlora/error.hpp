#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qzlora {

enum class ErrorCode {
  // corpus-ingest
  DuplicateTopic,
  InvalidTopic,
  UnknownTopic,
  SourceUnavailable,
  NoImagesFound,
  // quiz-gen
  ProviderFailure,
  ValidationExhausted,
  InvalidQuiz,
  // vlm-scorer
  UndecodableImage,
  // selector
  MixedQuiz,
  EmptyRanking,
  EmptyCorpus,
  InvalidCondition,
  // train-orchestrator
  MissingImage,
  EmptyCaptionAndSummary,
  InvalidOverride,
  TemplateError,
  TrainerFailed,
  // gen-driver
  MissingTemplate,
  BackendUnavailable,
  MissingLoRA,
  // eval-stats
  EmptyGroup,
  NoComparableTopics,
  MissingKColumn,
  DegenerateInput,
  // pipeline
  UpstreamIncomplete,
  ConfigError,
  // generic I/O or format problems in persisted state
  StoreError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateTopic: return "DuplicateTopic";
    case ErrorCode::InvalidTopic: return "InvalidTopic";
    case ErrorCode::UnknownTopic: return "UnknownTopic";
    case ErrorCode::SourceUnavailable: return "SourceUnavailable";
    case ErrorCode::NoImagesFound: return "NoImagesFound";
    case ErrorCode::ProviderFailure: return "ProviderFailure";
    case ErrorCode::ValidationExhausted: return "ValidationExhausted";
    case ErrorCode::InvalidQuiz: return "InvalidQuiz";
    case ErrorCode::UndecodableImage: return "UndecodableImage";
    case ErrorCode::MixedQuiz: return "MixedQuiz";
    case ErrorCode::EmptyRanking: return "EmptyRanking";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::InvalidCondition: return "InvalidCondition";
    case ErrorCode::MissingImage: return "MissingImage";
    case ErrorCode::EmptyCaptionAndSummary: return "EmptyCaptionAndSummary";
    case ErrorCode::InvalidOverride: return "InvalidOverride";
    case ErrorCode::TemplateError: return "TemplateError";
    case ErrorCode::TrainerFailed: return "TrainerFailed";
    case ErrorCode::MissingTemplate: return "MissingTemplate";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::MissingLoRA: return "MissingLoRA";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::NoComparableTopics: return "NoComparableTopics";
    case ErrorCode::MissingKColumn: return "MissingKColumn";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::UpstreamIncomplete: return "UpstreamIncomplete";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::StoreError: return "StoreError";
  }
  return "Unknown";
}

}  // namespace qzlora
