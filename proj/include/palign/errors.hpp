#pragma once

#include <stdexcept>
#include <string>

namespace palign {

// Malformed or unusable input (parse, schema, structure). CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition of an operation was violated by the caller.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace palign
