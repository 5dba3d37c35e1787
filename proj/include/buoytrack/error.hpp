#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

namespace buoytrack {

// Each module defines an error-code enum plus a `to_string(Code)` overload
// and throws `Error<Code>`. Callers that care about the failure kind catch
// the concrete instantiation and switch on code().
template <class Code>
    requires std::is_enum_v<Code>
class Error : public std::runtime_error {
public:
    Error(Code code, const std::string& detail)
        : std::runtime_error(compose(code, detail)), code_(code) {}

    explicit Error(Code code) : Error(code, std::string{}) {}

    [[nodiscard]] Code code() const noexcept { return code_; }

private:
    static std::string compose(Code code, const std::string& detail) {
        std::string msg{to_string(code)};
        if (!detail.empty()) {
            msg += ": ";
            msg += detail;
        }
        return msg;
    }

    Code code_;
};

}  // namespace buoytrack
