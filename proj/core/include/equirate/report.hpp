#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "equirate/evaluation.hpp"

namespace equirate {

nlohmann::ordered_json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& json);

// Output files, in the order they are written:
//   report.json               full report
//   monthly_mae.csv           method,month,horizon_months,mode,mae,std,n
//   rating_distribution.csv   method,rating,label,count,proportion
//   correlations.csv          method,pair,horizon_months,rho,n  (rho empty when undefined)
inline const std::vector<std::string> kReportFiles = {"report.json", "monthly_mae.csv", "rating_distribution.csv",
                                                      "correlations.csv"};

// Writes the four files; identical reports give byte-identical files.
// Throws Error(kIo).
void emit_report(const EvaluationReport& report, const std::filesystem::path& output_dir);

EvaluationReport load_report(const std::filesystem::path& report_json);

}  // namespace equirate
