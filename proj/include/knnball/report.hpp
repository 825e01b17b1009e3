#pragma once

// Serialization of estimator reports: a JSON document per run (stable key
// order, suitable for byte-wise reproducibility checks), a flat CSV view of
// the same numbers, and a side-car meta file for the volatile bits (wall
// clock, thread count, command line) so the main report stays deterministic.

#include <string>

#include "knnball/experiments.hpp"

namespace knnball {

std::string report_to_json(const EstimateReport& rep, const ExperimentConfig& cfg);

// Columns: estimator,n,a_n,b_n,key,value.  Summary rows leave n,a_n,b_n empty.
std::string report_to_csv(const EstimateReport& rep);

// Timestamp, thread count and the invoking command line.  Everything that may
// differ between identical runs belongs here and only here.
std::string meta_to_json(const std::string& command_line, int threads);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace knnball
