#include "tokspace/error.hpp"

namespace tokspace {

const char* kind_name(Error::Kind kind) noexcept {
  switch (kind) {
    case Error::Kind::UnspellableCharacter: return "UnspellableCharacter";
    case Error::Kind::UnknownTokenId: return "UnknownTokenId";
    case Error::Kind::NoTokenization: return "NoTokenization";
    case Error::Kind::InvalidPosition: return "InvalidPosition";
    case Error::Kind::TooManyPaths: return "TooManyPaths";
    case Error::Kind::ModelNotMarkov: return "ModelNotMarkov";
    case Error::Kind::CanonicalMismatch: return "CanonicalMismatch";
    case Error::Kind::NoWindow: return "NoWindow";
    case Error::Kind::TooManyVariables: return "TooManyVariables";
    case Error::Kind::DegenerateNormalizer: return "DegenerateNormalizer";
    case Error::Kind::PoolSizeMismatch: return "PoolSizeMismatch";
    case Error::Kind::InvalidArgument: return "InvalidArgument";
    case Error::Kind::Format: return "Format";
    case Error::Kind::Transport: return "Transport";
  }
  return "Unknown";
}

}  // namespace tokspace
