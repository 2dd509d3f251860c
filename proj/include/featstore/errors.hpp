#pragma once

#include <stdexcept>
#include <string>

namespace featstore {

// Runtime failure with a stable machine-readable code. The CLI prints
// "error[<code>]: <message>" and maps every Error to exit status 1.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error("[" + code + "] " + message), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

inline Error missing_column(const std::string& col, const std::string& file) {
    return Error("MissingColumn", "required column '" + col + "' not found in " + file);
}
inline Error empty_input(const std::string& what) {
    return Error("EmptyInput", what);
}

}  // namespace featstore
