#include "taxaudit/error.hpp"

namespace taxaudit {

namespace {

std::string render(const std::string& module, const std::string& code, const std::string& detail) {
    std::string out = module + ": " + code;
    if (!detail.empty()) out += ": " + detail;
    // keep it on one line
    for (char& c : out) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return out;
}

}  // namespace

Error::Error(std::string module, std::string code, std::string detail, ErrorKind kind)
    : std::runtime_error(render(module, code, detail)),
      module_(std::move(module)),
      code_(std::move(code)),
      detail_(std::move(detail)),
      kind_(kind) {}

}  // namespace taxaudit
