#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tokspace {

// Every domain failure is reported through this type; `kind` names the
// failure the way the command-line front end prints it.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    UnspellableCharacter,
    UnknownTokenId,
    NoTokenization,
    InvalidPosition,
    TooManyPaths,
    ModelNotMarkov,
    CanonicalMismatch,
    NoWindow,
    TooManyVariables,
    DegenerateNormalizer,
    PoolSizeMismatch,
    InvalidArgument,
    Format,
    Transport,
  };

  Error(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

const char* kind_name(Error::Kind kind) noexcept;

class UnspellableCharacter : public Error {
 public:
  explicit UnspellableCharacter(std::size_t position)
      : Error(Kind::UnspellableCharacter,
              "unspellable character at byte offset " +
                  std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace tokspace
