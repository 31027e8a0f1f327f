#pragma once

#include <stdexcept>
#include <string>

namespace qmagsim {

// All library errors derive from std::runtime_error or std::logic_error
// families so callers can catch at whatever granularity they like.

struct domain_error : std::domain_error {
  using std::domain_error::domain_error;
};

struct range_error : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct invalid_argument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct length_error : std::length_error {
  using std::length_error::length_error;
};

// Signal-free or degenerate spectra (zero noise floor).
struct degenerate_input : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct calibration_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qmagsim
