#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace stockcnn {

// All library failures carry a short dotted reason code (e.g. "data.too_few_rows")
// so that the CLI can print a single machine-parseable line.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

}  // namespace stockcnn
