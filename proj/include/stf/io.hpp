#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stf/field.hpp"
#include "stf/schemes.hpp"
#include "stf/sim.hpp"
#include "stf/state_space.hpp"
#include "stf/steady.hpp"
#include "stf/types.hpp"

// Serialization layer. Every file written here is readable by the matching
// read_* function. All content ids, state ids, and request indices are
// 1-based on disk; in-memory values are 0-based.

namespace stf {

// Shortest decimal form at 12 significant digits (the CSV number format).
std::string format_g12(double value);

// Rounds to 12 significant digits; applied to every double placed in a JSON
// document so dumps are compact and stable.
double round_sig12(double value);

// Rejects JSON that is not an object, is missing a required key, or carries
// a key outside required+optional. `where` names the document for errors.
void require_keys(const nlohmann::json& obj,
                  const std::vector<std::string>& required,
                  const std::vector<std::string>& optional,
                  const std::string& where);

nlohmann::json parse_json(std::istream& in, const std::string& where);

// JSON array <-> Eigen vector, entries rounded to 12 significant digits on
// the way out.
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& arr, const std::string& where);

// Scheme config: {"scheme":"rr","phi":..} | {"scheme":"lp","alpha":..,
// "predicted":[..]} | {"scheme":"tlp","variant":"A"|"P","predicted":[..]} |
// {"scheme":"lru"}. "predicted" also accepts a popularity object.
Scheme scheme_from_json(const nlohmann::json& j);

// Popularity config: {"kind":"zipf","n_contents":N,"exponent":s} |
// {"kind":"explicit","probabilities":[..]} | bare array of probabilities.
Popularity popularity_from_json(const nlohmann::json& j);

struct StatesDocument {
  int n_contents = 0;
  int cache_size = 0;
  std::vector<std::vector<int>> states;              // 0-based contents
  std::vector<std::vector<std::size_t>> neighbors;   // 0-based state ids
  Matrix cache_state_matrix;  // empty when the source lacks it (CSV listing)
};

void write_states_json(std::ostream& out, const StateSpace& space);
StatesDocument read_states_json(std::istream& in);
// One row per state: state,content_1..content_L,neighbor_1..neighbor_D.
void write_states_csv(std::ostream& out, const StateSpace& space);
StatesDocument read_states_csv(std::istream& in);
// Rows = contents, columns = states, 0/1 entries.
void write_cache_state_matrix_csv(std::ostream& out, const StateSpace& space);
Matrix read_cache_state_matrix_csv(std::istream& in);

// Dense numeric grid, no header.
void write_matrix_csv(std::ostream& out, const Matrix& m);
Matrix read_matrix_csv(std::istream& in);
// {"n_states":n,"triplets":[[row,col,value],..]} over nonzero entries.
void write_matrix_json(std::ostream& out, const Matrix& m);
Matrix read_matrix_json(std::istream& in);

struct FieldDocument {
  struct Row {
    Vector point;
    Vector field;
    // Per-content fields, indexed by 0-based content id.
    std::optional<std::vector<Vector>> decomposition;
  };
  std::optional<Vector> steady_state;
  std::vector<Row> rows;
};

// Columns: eta_1..eta_S,u_1..u_S and with decomposition u_c<l>_1..u_c<l>_S
// per content l. A steady state is carried in a leading "# steady_state,.."
// comment line.
void write_field_csv(std::ostream& out, const std::vector<FieldSample>& samples,
                     const std::optional<Vector>& steady_state);
FieldDocument read_field_csv(std::istream& in);
void write_field_json(std::ostream& out,
                      const std::vector<FieldSample>& samples,
                      const std::optional<Vector>& steady_state);
FieldDocument read_field_json(std::istream& in);

struct SteadyRecord {
  Vector eta_star;
  std::uint64_t iterations = 0;
  double residual = 0.0;
  std::string method;
};

struct SteadyDocument {
  SteadyRecord primary;
  std::optional<SteadyRecord> cross_check;
  std::optional<double> max_abs_diff;  // between primary and cross-check
};

SteadyRecord steady_record(const SteadyStateResult& result);
void write_steady_json(std::ostream& out, const SteadyDocument& doc);
SteadyDocument read_steady_json(std::istream& in);

struct SpectrumDocument {
  std::vector<double> eigenvalues_sorted;  // moduli, descending
  double second_largest = 0.0;
  std::optional<double> closed_form;
  std::optional<bool> agreement;
};

void write_spectrum_json(std::ostream& out, const SpectralReport& report);
SpectrumDocument read_spectrum_json(std::istream& in);

// Columns: request_index,content,hit,state; state is 0 when unknown.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);
Trajectory read_trajectory_csv(std::istream& in);
void write_trajectory_json(std::ostream& out, const Trajectory& trajectory);
Trajectory read_trajectory_json(std::istream& in);

// Columns: request_index,content,value; one row per (request, tracked).
void write_ccp_csv(std::ostream& out, const CcpEstimate& estimate);
CcpEstimate read_ccp_csv(std::istream& in);
void write_ccp_json(std::ostream& out, const CcpEstimate& estimate);
CcpEstimate read_ccp_json(std::istream& in);

}  // namespace stf
