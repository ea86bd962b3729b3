#pragma once

#include <stdexcept>
#include <string>

namespace skintact {

// File could not be opened/read/written.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// File opened fine but its contents violate the expected format.
struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace skintact
