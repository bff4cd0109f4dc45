#pragma once

#include <stdexcept>
#include <string>

namespace rmaj {

// Argument outside the documented domain of an operation (bad positions,
// symbols, ranges).
class range_error : public std::out_of_range {
   public:
    using std::out_of_range::out_of_range;
};

// Input rejected at construction time.
class validation_error : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

// Malformed serialized data.
class format_error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Request for a slot or routing path that the built structure does not have.
class addressing_error : public std::out_of_range {
   public:
    using std::out_of_range::out_of_range;
};

}  // namespace rmaj
