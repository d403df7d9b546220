#ifndef RADSPEC_ERRORS_HPP
#define RADSPEC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace radspec {

// Bad input: violated precondition, unknown name, mismatched grids.
class invalid_argument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine could not meet its accuracy contract. Never returned
// as a silent bad value.
class accuracy_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// An integral or series that does not converge for the given exponents.
class divergence_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string &what) {
  if (!cond)
    throw invalid_argument(what);
}

} // namespace detail
} // namespace radspec

#endif // RADSPEC_ERRORS_HPP
