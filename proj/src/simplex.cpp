#include "ivbounds/simplex.hpp"

namespace ivbounds {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

}  // namespace ivbounds
