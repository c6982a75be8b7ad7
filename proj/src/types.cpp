#include "ecosim/types.hpp"

namespace ecosim {

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Red: return "red";
    case Phase::Green: return "green";
    case Phase::Yellow: return "yellow";
  }
  return "unknown";
}

}  // namespace ecosim
