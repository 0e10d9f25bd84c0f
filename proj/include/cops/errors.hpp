#ifndef COPS_ERRORS_HPP
#define COPS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cops {

/// Violated precondition or malformed input. Mapped to exit code 2 by the CLI.
class contract_error : public std::runtime_error {
 public:
  explicit contract_error(const std::string& what) : std::runtime_error(what) {}
};

/// The evaluation budget would be exceeded by the requested draw.
class budget_error : public contract_error {
 public:
  explicit budget_error(const std::string& what) : contract_error(what) {}
};

/// Rejection sampling hit its attempt cap; the message names the failing constraint.
class generation_error : public contract_error {
 public:
  explicit generation_error(const std::string& what) : contract_error(what) {}
};

/// Filesystem failure. Mapped to exit code 3 by the CLI.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cops

#endif  // COPS_ERRORS_HPP
