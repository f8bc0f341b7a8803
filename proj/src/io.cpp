#include "lpeki/io.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lpeki/errors.h"

namespace lpeki {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Eigen::VectorXd(m.row(i))));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw InvalidInput("expected a JSON array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) out(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw InvalidInput("expected a non-empty JSON array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw InvalidInput("ragged matrix row " + std::to_string(r));
    }
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return out;
}

json problem_to_json(const CsProblem& problem) {
  return {{"kind", "cs"},
          {"seed", problem.seed},
          {"options",
           {{"obs_dim", problem.options.obs_dim},
            {"state_dim", problem.options.state_dim},
            {"n_nonzero", problem.options.n_nonzero},
            {"noise_var", problem.options.noise_var}}},
          {"matrix", to_json(problem.matrix)},
          {"u_true", to_json(problem.u_true)},
          {"y", to_json(problem.y)}};
}

json problem_to_json(const DarcyProblem& problem) {
  const DarcyOptions& o = problem.options;
  return {{"kind", "darcy"},
          {"seed", problem.seed},
          {"options",
           {{"basis_order", o.basis_order},
            {"mesh_n", o.mesh_n},
            {"obs_per_side", o.obs_per_side},
            {"noise_var", o.noise_var},
            {"n_nonzero", o.n_nonzero},
            {"min_magnitude", o.min_magnitude}}},
          {"u_true", to_json(problem.u_true)},
          {"y", to_json(problem.y)}};
}

namespace {

void expect_kind(const json& j, const std::string& kind) {
  if (!j.is_object() || j.value("kind", std::string{}) != kind) {
    throw InvalidInput("problem document is not of kind '" + kind + "'");
  }
}

}  // namespace

CsProblem cs_problem_from_json(const json& j) {
  expect_kind(j, "cs");
  CsProblem p;
  p.seed = j.at("seed").get<std::uint64_t>();
  const json& o = j.at("options");
  p.options.obs_dim = o.at("obs_dim").get<Eigen::Index>();
  p.options.state_dim = o.at("state_dim").get<Eigen::Index>();
  p.options.n_nonzero = o.at("n_nonzero").get<Eigen::Index>();
  p.options.noise_var = o.at("noise_var").get<double>();
  p.matrix = matrix_from_json(j.at("matrix"));
  p.u_true = vector_from_json(j.at("u_true"));
  p.y = vector_from_json(j.at("y"));
  if (p.matrix.rows() != p.options.obs_dim || p.matrix.cols() != p.options.state_dim ||
      p.u_true.size() != p.options.state_dim || p.y.size() != p.options.obs_dim) {
    throw InvalidInput("cs problem document has inconsistent dimensions");
  }
  return p;
}

DarcyProblem darcy_problem_from_json(const json& j) {
  expect_kind(j, "darcy");
  DarcyProblem p;
  p.seed = j.at("seed").get<std::uint64_t>();
  const json& o = j.at("options");
  p.options.basis_order = o.at("basis_order").get<int>();
  p.options.mesh_n = o.at("mesh_n").get<int>();
  p.options.obs_per_side = o.at("obs_per_side").get<int>();
  p.options.noise_var = o.at("noise_var").get<double>();
  p.options.n_nonzero = o.at("n_nonzero").get<int>();
  p.options.min_magnitude = o.at("min_magnitude").get<double>();
  p.u_true = vector_from_json(j.at("u_true"));
  p.y = vector_from_json(j.at("y"));
  const Eigen::Index n = static_cast<Eigen::Index>(p.options.basis_order) * p.options.basis_order;
  const Eigen::Index m = static_cast<Eigen::Index>(p.options.obs_per_side) * p.options.obs_per_side;
  if (p.u_true.size() != n || p.y.size() != m) {
    throw InvalidInput("darcy problem document has inconsistent dimensions");
  }
  return p;
}

std::string trace_to_csv(const RunTrace& trace) {
  std::ostringstream out;
  out << "iter,l1_error,data_misfit,n_active\n";
  for (const IterationRecord& r : trace.records) {
    out << r.iter << ',' << format_double(r.l1_error) << ',' << format_double(r.data_misfit) << ','
        << r.n_active << '\n';
  }
  return out.str();
}

json trace_to_json(const RunTrace& trace, const json& config) {
  json iterations = json::array();
  for (const IterationRecord& r : trace.records) {
    iterations.push_back({{"iter", r.iter},
                          {"l1_error", r.l1_error},
                          {"data_misfit", r.data_misfit},
                          {"n_active", r.n_active},
                          {"spread", r.spread}});
  }
  json out = {{"config", config}, {"iterations", iterations}, {"support", trace.support}};
  out["final_estimate"] = trace.records.empty() ? json::array() : to_json(trace.final().estimate);
  return out;
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

void save_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << text;
}

void save_json(const std::filesystem::path& path, const json& j) {
  save_text(path, j.dump(2) + "\n");
}

}  // namespace lpeki
