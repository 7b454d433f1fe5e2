#pragma once

#include <stdexcept>
#include <string>

namespace taxaudit {

/// Whether a failure was caused by bad input/configuration or by the tool itself.
enum class ErrorKind { User, Internal };

/// Exception carrying the pipeline stage that raised it and a short machine-readable code.
///
/// what() renders as "<module>: <code>" or "<module>: <code>: <detail>", which is
/// what the CLI prints on a single line.
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string code, std::string detail = {},
          ErrorKind kind = ErrorKind::User);

    const std::string& module() const noexcept { return module_; }
    const std::string& code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }
    ErrorKind kind() const noexcept { return kind_; }

private:
    std::string module_;
    std::string code_;
    std::string detail_;
    ErrorKind kind_;
};

}  // namespace taxaudit
