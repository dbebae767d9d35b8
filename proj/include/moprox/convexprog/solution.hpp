#pragma once

#include "moprox/types.hpp"

#include <string_view>

namespace moprox {

enum class ProgramStatus { optimal, infeasible, unbounded, max_iterations };

constexpr std::string_view to_string(ProgramStatus s) {
  switch (s) {
    case ProgramStatus::optimal: return "optimal";
    case ProgramStatus::infeasible: return "infeasible";
    case ProgramStatus::unbounded: return "unbounded";
    case ProgramStatus::max_iterations: return "max_iterations";
  }
  return "unknown";
}

/// Scaled KKT residual components. Every entry is an infinity norm divided by
/// 1 + (largest absolute problem datum).
struct KktResiduals {
  double stationarity = kInf;
  double primal_feasibility = kInf;
  double dual_feasibility = kInf;
  double complementarity = kInf;

  [[nodiscard]] double max() const {
    return std::max({stationarity, primal_feasibility, dual_feasibility, complementarity});
  }
};

struct ProgramSolution {
  ProgramStatus status = ProgramStatus::max_iterations;
  Vector primal;
  Vector dual_ineq;
  Vector dual_eq;
  double objective_value = kNaN;
  double kkt_residual = kInf;
  KktResiduals residuals;
  int iterations = 0;
  // Diagonal perturbation added to factorized systems (0 when none was needed).
  double regularization = 0.0;

  [[nodiscard]] bool optimal() const { return status == ProgramStatus::optimal; }
};

}  // namespace moprox
