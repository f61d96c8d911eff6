#include "perihom/error.hpp"

namespace perihom {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::degenerate_lattice: return "degenerate_lattice";
    case ErrorKind::non_elliptic: return "non_elliptic";
    case ErrorKind::invalid_coefficient: return "invalid_coefficient";
    case ErrorKind::component_mismatch: return "component_mismatch";
    case ErrorKind::solver_failure: return "solver_failure";
    case ErrorKind::out_of_support: return "out_of_support";
    case ErrorKind::invalid_kernel: return "invalid_kernel";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::empty_subdomain: return "empty_subdomain";
    case ErrorKind::fit_error: return "fit_error";
    case ErrorKind::io_error: return "io_error";
  }
  return "unknown";
}

}  // namespace perihom
