#ifndef LPEKI_IO_H_
#define LPEKI_IO_H_

#include <filesystem>
#include <string>

#include "json.hpp"

#include "lpeki/darcy.h"
#include "lpeki/forward_model.h"
#include "lpeki/solver.h"

namespace lpeki {

using json = nlohmann::json;

/// Shortest text that still round-trips: 17 significant digits.
std::string format_double(double value);

json to_json(const Eigen::VectorXd& v);
json to_json(const Eigen::MatrixXd& m);  // array of rows
Eigen::VectorXd vector_from_json(const json& j);
Eigen::MatrixXd matrix_from_json(const json& j);

/// {"kind": "cs", "seed", "options", "matrix", "u_true", "y"}.
json problem_to_json(const CsProblem& problem);
/// {"kind": "darcy", "seed", "options", "u_true", "y"}.
json problem_to_json(const DarcyProblem& problem);
CsProblem cs_problem_from_json(const json& j);
DarcyProblem darcy_problem_from_json(const json& j);

/// One row per iteration: `iter,l1_error,data_misfit,n_active`.
std::string trace_to_csv(const RunTrace& trace);
/// Config echo, per-iteration scalars, final estimate and support.
json trace_to_json(const RunTrace& trace, const json& config);

json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const json& j);
void save_text(const std::filesystem::path& path, const std::string& text);

}  // namespace lpeki

#endif  // LPEKI_IO_H_
