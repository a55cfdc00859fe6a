#ifndef A2V_ERROR_HPP_
#define A2V_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace a2v {

// Error categories map onto CLI exit codes: usage=1, data=2, numeric=3.
enum class ErrorKind { usage, data, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    static Error usage(const std::string& msg) { return Error(ErrorKind::usage, msg); }
    static Error data(const std::string& msg) { return Error(ErrorKind::data, msg); }
    static Error numeric(const std::string& msg) { return Error(ErrorKind::numeric, msg); }

private:
    ErrorKind kind_;
};

}  // namespace a2v

#endif  // A2V_ERROR_HPP_
