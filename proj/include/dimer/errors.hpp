#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dimer {

// Every failure carries a stable machine-readable code (used by the CLI exit
// path and by tests) plus a human-readable message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Spec validation collects every violated invariant before throwing.
class ValidationError : public Error {
public:
    ValidationError(std::vector<std::string> codes, const std::string& message)
        : Error(codes.empty() ? std::string("InvalidSpec") : codes.front(), message),
          codes_(std::move(codes)) {}

    const std::vector<std::string>& codes() const noexcept { return codes_; }

    bool has(const std::string& code) const noexcept {
        for (const auto& c : codes_)
            if (c == code) return true;
        return false;
    }

private:
    std::vector<std::string> codes_;
};

// Config-file problems remember the offending line (0 = not line-specific).
class ConfigError : public Error {
public:
    ConfigError(int line, const std::string& message)
        : Error("ConfigError", message), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

[[noreturn]] inline void fail(const char* code, const std::string& message) {
    throw Error(code, message);
}

} // namespace dimer
