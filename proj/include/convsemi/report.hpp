#pragma once

#include <map>
#include <string>
#include <utility>

#include <json.hpp>

#include "convsemi/grid.hpp"

namespace convsemi {

/// Outcome of one residual check: the checked identity/property, the worst
/// absolute residual found, the parameters used and a pass/fail verdict at
/// the given tolerance. `passed` is always `max_abs_residual <= tolerance`.
struct ResidualReport {
    std::string name;
    double max_abs_residual = 0.0;
    Grid grid;
    std::map<std::string, double> params;
    double tolerance_used = 0.0;
    bool passed = false;

    ResidualReport() = default;
    ResidualReport(std::string name_, double residual, Grid grid_, std::map<std::string, double> params_,
                   double tol)
        : name(std::move(name_)),
          max_abs_residual(residual),
          grid(grid_),
          params(std::move(params_)),
          tolerance_used(tol),
          passed(residual <= tol) {}
};

inline nlohmann::json to_json(const ResidualReport& r) {
    return nlohmann::json{{"name", r.name},
                          {"params", r.params},
                          {"max_abs_residual", r.max_abs_residual},
                          {"tolerance", r.tolerance_used},
                          {"passed", r.passed},
                          {"grid", {{"dt", r.grid.dt}, {"n", r.grid.n_points}}}};
}

}  // namespace convsemi
