#pragma once

#include <stdexcept>
#include <string>

namespace nlbranch {

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

}  // namespace nlbranch
