// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vmsched {

enum class ErrorCode {
  // trace
  MalformedRow,
  UnmatchedDelete,
  NegativeDemand,
  InvalidThresholds,
  EmptySequence,
  DimensionMismatch,
  ScenarioTooShort,
  InvalidMixture,
  // sim
  OffsetOutOfRange,
  NotACreateEvent,
  IllegalAction,
  SteppedAfterTerminal,
  EpisodeAborted,
  InvalidCluster,
  // heuristics
  PolicyEvalFailed,
  MissingDuration,
  // policy vm
  ParseError,
  ForbiddenConstruct,
  RuntimeFault,
  Timeout,
  OutOfRange,
  // llm gateway
  EmptyExemplars,
  BackendUnavailable,
  BudgetExceeded,
  ExtractionFailed,
  // miner / composer / exec
  PartialLibrary,
  EmptyRetention,
  SelectorFault,
  // oracle
  BudgetExhausted,
  InstanceTooLarge,
  DivisionByZeroOffline,
  // bench
  EmptyLedger,
  InvalidConfig,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure in the library surfaces as an Error carrying a stable code.
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
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::UnmatchedDelete: return "UnmatchedDelete";
    case ErrorCode::NegativeDemand: return "NegativeDemand";
    case ErrorCode::InvalidThresholds: return "InvalidThresholds";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ScenarioTooShort: return "ScenarioTooShort";
    case ErrorCode::InvalidMixture: return "InvalidMixture";
    case ErrorCode::OffsetOutOfRange: return "OffsetOutOfRange";
    case ErrorCode::NotACreateEvent: return "NotACreateEvent";
    case ErrorCode::IllegalAction: return "IllegalAction";
    case ErrorCode::SteppedAfterTerminal: return "SteppedAfterTerminal";
    case ErrorCode::EpisodeAborted: return "EpisodeAborted";
    case ErrorCode::InvalidCluster: return "InvalidCluster";
    case ErrorCode::PolicyEvalFailed: return "PolicyEvalFailed";
    case ErrorCode::MissingDuration: return "MissingDuration";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ForbiddenConstruct: return "ForbiddenConstruct";
    case ErrorCode::RuntimeFault: return "RuntimeFault";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyExemplars: return "EmptyExemplars";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::ExtractionFailed: return "ExtractionFailed";
    case ErrorCode::PartialLibrary: return "PartialLibrary";
    case ErrorCode::EmptyRetention: return "EmptyRetention";
    case ErrorCode::SelectorFault: return "SelectorFault";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::DivisionByZeroOffline: return "DivisionByZeroOffline";
    case ErrorCode::EmptyLedger: return "EmptyLedger";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace vmsched
