#include "fspike/error.hpp"

namespace fspike {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::usage: return "usage";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::io: return "io";
    case ErrorKind::format: return "format";
    }
    return "unknown";
}

} // namespace fspike
