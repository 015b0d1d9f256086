#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace corpusmap {

enum class ErrorCode {
    invalid_argument,
    io,
    empty_corpus,
    provider_unavailable,
    incompatible_snapshot,
    corrupt_snapshot,
    empty_context,
    no_route,
    not_found,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every engine failure surfaces as this exception; callers switch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string detail = {})
        : std::runtime_error(message), code_(code), detail_(std::move(detail))
    {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message, std::string detail = {})
{
    throw Error(code, message, std::move(detail));
}

}  // namespace corpusmap
