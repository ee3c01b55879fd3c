#include "wdsel/error.hpp"

namespace wdsel {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::input: return "input";
    case ErrorKind::structural: return "structural";
    case ErrorKind::decomposition: return "decomposition";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::saturation: return "saturation";
    case ErrorKind::empty_selection: return "empty_selection";
    case ErrorKind::analysis: return "analysis";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::usage: return "usage";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::io: return "io";
    case ErrorKind::corrupt: return "corrupt";
    case ErrorKind::version: return "version";
    case ErrorKind::hash_mismatch: return "hash_mismatch";
  }
  return "unknown";
}

}  // namespace wdsel
