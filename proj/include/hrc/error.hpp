#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hrc {

enum class Errc {
  SyntaxError,
  UnknownRelation,
  UnknownFunction,
  ArityMismatch,
  ArgumentKindMismatch,
  UnboundVariable,
  UnknownObject,
  DomainTooLarge,
  UnknownParent,
  DuplicateName,
  RangeNotSubsetOfParent,
  UnresolvedSubobjectType,
  UnknownAttribute,
  UnknownType,
  InvalidDefinition,
  InvalidDescription,
  UnknownId,
  DisjunctiveEffect,
  SearchBudgetExceeded,
  UnknownTransaction,
  AlreadyTerminal,
  DuplicateId,
  MalformedFormula,
  UnknownProvider,
  HorizonExceeded,
  InvalidScenario,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Parse failures carry the byte offset of the offending token.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& message)
      : Error(Errc::SyntaxError, message + " at position " + std::to_string(position)),
        position_(position) {}

  [[nodiscard]] std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace hrc
