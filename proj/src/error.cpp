#include "hrc/error.hpp"

namespace hrc {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::UnknownRelation: return "UnknownRelation";
    case Errc::UnknownFunction: return "UnknownFunction";
    case Errc::ArityMismatch: return "ArityMismatch";
    case Errc::ArgumentKindMismatch: return "ArgumentKindMismatch";
    case Errc::UnboundVariable: return "UnboundVariable";
    case Errc::UnknownObject: return "UnknownObject";
    case Errc::DomainTooLarge: return "DomainTooLarge";
    case Errc::UnknownParent: return "UnknownParent";
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::RangeNotSubsetOfParent: return "RangeNotSubsetOfParent";
    case Errc::UnresolvedSubobjectType: return "UnresolvedSubobjectType";
    case Errc::UnknownAttribute: return "UnknownAttribute";
    case Errc::UnknownType: return "UnknownType";
    case Errc::InvalidDefinition: return "InvalidDefinition";
    case Errc::InvalidDescription: return "InvalidDescription";
    case Errc::UnknownId: return "UnknownId";
    case Errc::DisjunctiveEffect: return "DisjunctiveEffect";
    case Errc::SearchBudgetExceeded: return "SearchBudgetExceeded";
    case Errc::UnknownTransaction: return "UnknownTransaction";
    case Errc::AlreadyTerminal: return "AlreadyTerminal";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::MalformedFormula: return "MalformedFormula";
    case Errc::UnknownProvider: return "UnknownProvider";
    case Errc::HorizonExceeded: return "HorizonExceeded";
    case Errc::InvalidScenario: return "InvalidScenario";
  }
  return "Error";
}

}  // namespace hrc
