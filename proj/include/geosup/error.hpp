#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace geosup {

/// Domain error carrying a stable machine-readable name (e.g. "BehindCamera")
/// next to the human-readable message. The CLI maps any Error to exit code 1
/// and prints "<name>: <message>" on the error stream.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& message)
        : std::runtime_error(message), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

} // namespace geosup
