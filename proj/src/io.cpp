#include "stf/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>

namespace stf {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(begin));
      return fields;
    }
    fields.push_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
}

double parse_double(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": not a number: '" + text + "'");
  }
  if (used != text.size()) {
    throw std::runtime_error(where + ": not a number: '" + text + "'");
  }
  return value;
}

long long parse_integer(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  long long value = 0;
  try {
    value = std::stoll(text, &used);
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": not an integer: '" + text + "'");
  }
  if (used != text.size()) {
    throw std::runtime_error(where + ": not an integer: '" + text + "'");
  }
  return value;
}

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

void dump_document(std::ostream& out, const nlohmann::json& doc) {
  out << doc.dump(2) << '\n';
}

std::string csv_join_g12(const Vector& v) {
  std::string line;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) line += ',';
    line += format_g12(v[i]);
  }
  return line;
}

nlohmann::json steady_record_to_json(const SteadyRecord& record) {
  nlohmann::json j;
  j["eta_star"] = vector_to_json(record.eta_star);
  j["iterations"] = record.iterations;
  j["residual"] = round_sig12(record.residual);
  j["method"] = record.method;
  return j;
}

SteadyRecord steady_record_from_json(
    const nlohmann::json& j, const std::string& where,
    const std::vector<std::string>& extra = {}) {
  // `extra` admits sibling keys when the record shares an object level.
  require_keys(j, {"eta_star", "iterations", "residual", "method"}, extra,
               where);
  SteadyRecord record;
  record.eta_star = vector_from_json(j["eta_star"], where + ".eta_star");
  if (!j["iterations"].is_number_unsigned() &&
      !j["iterations"].is_number_integer()) {
    throw std::runtime_error(where + ": 'iterations' must be an integer");
  }
  record.iterations = j["iterations"].get<std::uint64_t>();
  if (!j["residual"].is_number()) {
    throw std::runtime_error(where + ": 'residual' must be a number");
  }
  record.residual = j["residual"].get<double>();
  if (!j["method"].is_string()) {
    throw std::runtime_error(where + ": 'method' must be a string");
  }
  record.method = j["method"].get<std::string>();
  return record;
}

}  // namespace

std::string format_g12(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

double round_sig12(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return std::strtod(buffer, nullptr);
}

void require_keys(const nlohmann::json& obj,
                  const std::vector<std::string>& required,
                  const std::vector<std::string>& optional,
                  const std::string& where) {
  if (!obj.is_object()) {
    throw std::runtime_error(where + ": expected a JSON object");
  }
  for (const auto& key : required) {
    if (!obj.contains(key)) {
      throw std::runtime_error(where + ": missing required key '" + key + "'");
    }
  }
  for (const auto& item : obj.items()) {
    const std::string& key = item.key();
    if (std::find(required.begin(), required.end(), key) == required.end() &&
        std::find(optional.begin(), optional.end(), key) == optional.end()) {
      throw std::runtime_error(where + ": unknown key '" + key + "'");
    }
  }
}

nlohmann::json parse_json(std::istream& in, const std::string& where) {
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& error) {
    throw std::runtime_error(where + ": " + error.what());
  }
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    arr.push_back(round_sig12(v[i]));
  }
  return arr;
}

Vector vector_from_json(const nlohmann::json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty()) {
    throw std::runtime_error(where + ": expected a non-empty array");
  }
  Vector v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& entry : arr) {
    if (!entry.is_number()) {
      throw std::runtime_error(where + ": expected numbers");
    }
    v[i++] = entry.get<double>();
  }
  return v;
}

Scheme scheme_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("scheme") || !j["scheme"].is_string()) {
    throw std::runtime_error(
        "scheme config: expected an object with a 'scheme' name");
  }
  const std::string name = j["scheme"].get<std::string>();
  if (name == "rr") {
    require_keys(j, {"scheme", "phi"}, {}, "rr scheme config");
    if (!j["phi"].is_number()) {
      throw std::runtime_error("rr scheme config: 'phi' must be a number");
    }
    return RrScheme{j["phi"].get<double>()};
  }
  if (name == "lp") {
    require_keys(j, {"scheme", "alpha", "predicted"}, {}, "lp scheme config");
    if (!j["alpha"].is_number()) {
      throw std::runtime_error("lp scheme config: 'alpha' must be a number");
    }
    return LpScheme{j["alpha"].get<double>(),
                    popularity_from_json(j["predicted"])};
  }
  if (name == "tlp") {
    require_keys(j, {"scheme", "variant", "predicted"}, {},
                 "tlp scheme config");
    if (!j["variant"].is_string()) {
      throw std::runtime_error(
          "tlp scheme config: 'variant' must be \"A\" or \"P\"");
    }
    const std::string variant = j["variant"].get<std::string>();
    if (variant != "A" && variant != "P") {
      throw std::runtime_error("tlp scheme config: unknown variant '" +
                               variant + "'");
    }
    return TlpScheme{variant == "A" ? TlpVariant::kAlways
                                    : TlpVariant::kProbabilistic,
                     popularity_from_json(j["predicted"])};
  }
  if (name == "lru") {
    require_keys(j, {"scheme"}, {}, "lru scheme config");
    return LruScheme{};
  }
  throw std::runtime_error("unknown scheme '" + name + "'");
}

Popularity popularity_from_json(const nlohmann::json& j) {
  if (j.is_array()) {
    return Popularity(vector_from_json(j, "popularity"));
  }
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw std::runtime_error(
        "popularity config: expected an array or an object with a 'kind'");
  }
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "zipf") {
    require_keys(j, {"kind", "n_contents", "exponent"}, {},
                 "zipf popularity config");
    if (!j["n_contents"].is_number_integer() || !j["exponent"].is_number()) {
      throw std::runtime_error(
          "zipf popularity config: 'n_contents' must be an integer and "
          "'exponent' a number");
    }
    return zipf_popularity(j["n_contents"].get<int>(),
                           j["exponent"].get<double>());
  }
  if (kind == "explicit") {
    require_keys(j, {"kind", "probabilities"}, {},
                 "explicit popularity config");
    return Popularity(
        vector_from_json(j["probabilities"], "popularity probabilities"));
  }
  throw std::runtime_error("unknown popularity kind '" + kind + "'");
}

void write_states_json(std::ostream& out, const StateSpace& space) {
  nlohmann::json doc;
  doc["n_contents"] = space.n_contents();
  doc["cache_size"] = space.cache_size();
  doc["n_states"] = space.n_states();
  nlohmann::json states = nlohmann::json::array();
  nlohmann::json neighbors = nlohmann::json::array();
  for (std::size_t k = 0; k < space.n_states(); ++k) {
    nlohmann::json contents = nlohmann::json::array();
    for (int c : space.state(k)) contents.push_back(c + 1);
    states.push_back(std::move(contents));
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t m : space.neighbors(k)) row.push_back(m + 1);
    neighbors.push_back(std::move(row));
  }
  doc["states"] = std::move(states);
  doc["neighbors"] = std::move(neighbors);
  const Matrix cs = space.cache_state_matrix();
  nlohmann::json matrix = nlohmann::json::array();
  for (Eigen::Index r = 0; r < cs.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < cs.cols(); ++c) {
      row.push_back(static_cast<int>(cs(r, c)));
    }
    matrix.push_back(std::move(row));
  }
  doc["cache_state_matrix"] = std::move(matrix);
  dump_document(out, doc);
}

StatesDocument read_states_json(std::istream& in) {
  const nlohmann::json doc = parse_json(in, "states document");
  require_keys(doc,
               {"n_contents", "cache_size", "n_states", "states", "neighbors",
                "cache_state_matrix"},
               {}, "states document");
  StatesDocument result;
  result.n_contents = doc["n_contents"].get<int>();
  result.cache_size = doc["cache_size"].get<int>();
  const auto n_states = doc["n_states"].get<std::size_t>();
  if (!doc["states"].is_array() || doc["states"].size() != n_states ||
      !doc["neighbors"].is_array() || doc["neighbors"].size() != n_states) {
    throw std::runtime_error(
        "states document: 'states' and 'neighbors' must list n_states rows");
  }
  for (const auto& entry : doc["states"]) {
    std::vector<int> contents;
    for (const auto& c : entry) contents.push_back(c.get<int>() - 1);
    result.states.push_back(std::move(contents));
  }
  for (const auto& entry : doc["neighbors"]) {
    std::vector<std::size_t> row;
    for (const auto& m : entry) {
      const auto id = m.get<long long>();
      if (id < 1 || static_cast<std::size_t>(id) > n_states) {
        throw std::runtime_error("states document: neighbor id out of range");
      }
      row.push_back(static_cast<std::size_t>(id - 1));
    }
    result.neighbors.push_back(std::move(row));
  }
  const auto& matrix = doc["cache_state_matrix"];
  if (!matrix.is_array() ||
      matrix.size() != static_cast<std::size_t>(result.n_contents)) {
    throw std::runtime_error(
        "states document: cache_state_matrix must have one row per content");
  }
  result.cache_state_matrix.resize(result.n_contents,
                                   static_cast<Eigen::Index>(n_states));
  Eigen::Index r = 0;
  for (const auto& row : matrix) {
    if (!row.is_array() || row.size() != n_states) {
      throw std::runtime_error(
          "states document: cache_state_matrix row has wrong length");
    }
    Eigen::Index c = 0;
    for (const auto& cell : row) {
      result.cache_state_matrix(r, c++) = cell.get<double>();
    }
    ++r;
  }
  return result;
}

void write_states_csv(std::ostream& out, const StateSpace& space) {
  const int L = space.cache_size();
  const int degree = L * (space.n_contents() - L);
  out << "state";
  for (int i = 1; i <= L; ++i) out << ",content_" << i;
  for (int i = 1; i <= degree; ++i) out << ",neighbor_" << i;
  out << '\n';
  for (std::size_t k = 0; k < space.n_states(); ++k) {
    out << (k + 1);
    for (int c : space.state(k)) out << ',' << (c + 1);
    for (std::size_t m : space.neighbors(k)) out << ',' << (m + 1);
    out << '\n';
  }
}

StatesDocument read_states_csv(std::istream& in) {
  const std::vector<std::string> lines = read_lines(in);
  if (lines.empty()) {
    throw std::runtime_error("state listing: empty input");
  }
  const std::vector<std::string> header = split_csv(lines[0]);
  if (header.empty() || header[0] != "state") {
    throw std::runtime_error(
        "state listing: header must start with 'state'");
  }
  std::size_t pos = 1;
  int cache_size = 0;
  while (pos < header.size() &&
         header[pos] == "content_" + std::to_string(cache_size + 1)) {
    ++cache_size;
    ++pos;
  }
  int degree = 0;
  while (pos < header.size() &&
         header[pos] == "neighbor_" + std::to_string(degree + 1)) {
    ++degree;
    ++pos;
  }
  if (cache_size == 0 || pos != header.size()) {
    throw std::runtime_error("state listing: malformed header");
  }
  StatesDocument result;
  result.cache_size = cache_size;
  const std::size_t n_states = lines.size() - 1;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::string where = "state listing row " + std::to_string(row);
    const std::vector<std::string> fields = split_csv(lines[row]);
    if (fields.size() != header.size()) {
      throw std::runtime_error(where + ": wrong field count");
    }
    if (parse_integer(fields[0], where) != static_cast<long long>(row)) {
      throw std::runtime_error(where + ": state ids must count from 1");
    }
    std::vector<int> contents;
    for (int i = 0; i < cache_size; ++i) {
      const long long c = parse_integer(fields[1 + i], where);
      if (c < 1) throw std::runtime_error(where + ": content id < 1");
      contents.push_back(static_cast<int>(c - 1));
      result.n_contents = std::max(result.n_contents, static_cast<int>(c));
    }
    std::vector<std::size_t> neighbors;
    for (int i = 0; i < degree; ++i) {
      const long long m = parse_integer(fields[1 + cache_size + i], where);
      if (m < 1 || static_cast<std::size_t>(m) > n_states) {
        throw std::runtime_error(where + ": neighbor id out of range");
      }
      neighbors.push_back(static_cast<std::size_t>(m - 1));
    }
    result.states.push_back(std::move(contents));
    result.neighbors.push_back(std::move(neighbors));
  }
  return result;
}

void write_cache_state_matrix_csv(std::ostream& out, const StateSpace& space) {
  const Matrix cs = space.cache_state_matrix();
  for (Eigen::Index r = 0; r < cs.rows(); ++r) {
    for (Eigen::Index c = 0; c < cs.cols(); ++c) {
      if (c > 0) out << ',';
      out << static_cast<int>(cs(r, c));
    }
    out << '\n';
  }
}

Matrix read_cache_state_matrix_csv(std::istream& in) {
  return read_matrix_csv(in);
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_g12(m(r, c));
    }
    out << '\n';
  }
}

Matrix read_matrix_csv(std::istream& in) {
  const std::vector<std::string> lines = read_lines(in);
  if (lines.empty()) {
    throw std::runtime_error("matrix csv: empty input");
  }
  const auto rows = static_cast<Eigen::Index>(lines.size());
  Eigen::Index cols = 0;
  Matrix m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::string where = "matrix csv row " + std::to_string(r + 1);
    const std::vector<std::string> fields =
        split_csv(lines[static_cast<std::size_t>(r)]);
    if (r == 0) {
      cols = static_cast<Eigen::Index>(fields.size());
      m.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(fields.size()) != cols) {
      throw std::runtime_error(where + ": wrong field count");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = parse_double(fields[static_cast<std::size_t>(c)], where);
    }
  }
  return m;
}

void write_matrix_json(std::ostream& out, const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(
        "matrix JSON export expects a square state matrix");
  }
  nlohmann::json doc;
  doc["n_states"] = m.rows();
  nlohmann::json triplets = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (m(r, c) == 0.0) continue;
      triplets.push_back(
          nlohmann::json::array({r + 1, c + 1, round_sig12(m(r, c))}));
    }
  }
  doc["triplets"] = std::move(triplets);
  dump_document(out, doc);
}

Matrix read_matrix_json(std::istream& in) {
  const nlohmann::json doc = parse_json(in, "matrix document");
  require_keys(doc, {"n_states", "triplets"}, {}, "matrix document");
  const auto n = doc["n_states"].get<Eigen::Index>();
  if (n < 1) {
    throw std::runtime_error("matrix document: n_states must be positive");
  }
  Matrix m = Matrix::Zero(n, n);
  for (const auto& triplet : doc["triplets"]) {
    if (!triplet.is_array() || triplet.size() != 3) {
      throw std::runtime_error(
          "matrix document: triplets must be [row, col, value]");
    }
    const auto r = triplet[0].get<Eigen::Index>();
    const auto c = triplet[1].get<Eigen::Index>();
    if (r < 1 || r > n || c < 1 || c > n) {
      throw std::runtime_error("matrix document: triplet index out of range");
    }
    if (m(r - 1, c - 1) != 0.0) {
      throw std::runtime_error("matrix document: duplicate triplet");
    }
    m(r - 1, c - 1) = triplet[2].get<double>();
  }
  return m;
}

namespace {

void check_field_samples(const std::vector<FieldSample>& samples,
                         const std::optional<Vector>& steady_state,
                         Eigen::Index& n_states, Eigen::Index& n_contents) {
  if (samples.empty()) {
    throw std::invalid_argument("no field samples to write");
  }
  n_states = samples.front().point.size();
  const bool decomposed = samples.front().decomposition.has_value();
  n_contents =
      decomposed
          ? static_cast<Eigen::Index>(samples.front().decomposition->size())
          : 0;
  for (const auto& sample : samples) {
    if (sample.point.size() != n_states ||
        sample.field.size() != n_states ||
        sample.decomposition.has_value() != decomposed) {
      throw std::invalid_argument("field samples are not uniform");
    }
    if (decomposed) {
      if (static_cast<Eigen::Index>(sample.decomposition->size()) !=
          n_contents) {
        throw std::invalid_argument("field samples are not uniform");
      }
      for (const auto& part : *sample.decomposition) {
        if (part.size() != n_states) {
          throw std::invalid_argument("field samples are not uniform");
        }
      }
    }
  }
  if (steady_state && steady_state->size() != n_states) {
    throw std::invalid_argument("steady state has wrong length");
  }
}

}  // namespace

void write_field_csv(std::ostream& out,
                     const std::vector<FieldSample>& samples,
                     const std::optional<Vector>& steady_state) {
  Eigen::Index n_states = 0;
  Eigen::Index n_contents = 0;
  check_field_samples(samples, steady_state, n_states, n_contents);
  if (steady_state) {
    out << "# steady_state," << csv_join_g12(*steady_state) << '\n';
  }
  for (Eigen::Index k = 1; k <= n_states; ++k) {
    out << (k == 1 ? "" : ",") << "eta_" << k;
  }
  for (Eigen::Index k = 1; k <= n_states; ++k) out << ",u_" << k;
  for (Eigen::Index l = 1; l <= n_contents; ++l) {
    for (Eigen::Index k = 1; k <= n_states; ++k) {
      out << ",u_c" << l << '_' << k;
    }
  }
  out << '\n';
  for (const auto& sample : samples) {
    out << csv_join_g12(sample.point.vec()) << ','
        << csv_join_g12(sample.field);
    if (sample.decomposition) {
      for (const auto& part : *sample.decomposition) {
        out << ',' << csv_join_g12(part);
      }
    }
    out << '\n';
  }
}

FieldDocument read_field_csv(std::istream& in) {
  const std::vector<std::string> lines = read_lines(in);
  std::size_t pos = 0;
  FieldDocument doc;
  if (!lines.empty() && lines[0].rfind("# steady_state,", 0) == 0) {
    const std::vector<std::string> fields = split_csv(lines[0]);
    Vector steady(static_cast<Eigen::Index>(fields.size() - 1));
    for (std::size_t i = 1; i < fields.size(); ++i) {
      steady[static_cast<Eigen::Index>(i - 1)] =
          parse_double(fields[i], "field csv steady state");
    }
    doc.steady_state = std::move(steady);
    pos = 1;
  }
  if (pos >= lines.size()) {
    throw std::runtime_error("field csv: missing header");
  }
  const std::vector<std::string> header = split_csv(lines[pos]);
  std::size_t cursor = 0;
  Eigen::Index n_states = 0;
  while (cursor < header.size() &&
         header[cursor] == "eta_" + std::to_string(n_states + 1)) {
    ++n_states;
    ++cursor;
  }
  if (n_states == 0) {
    throw std::runtime_error("field csv: header must start with eta_1");
  }
  for (Eigen::Index k = 1; k <= n_states; ++k, ++cursor) {
    if (cursor >= header.size() ||
        header[cursor] != "u_" + std::to_string(k)) {
      throw std::runtime_error("field csv: malformed field columns");
    }
  }
  Eigen::Index n_contents = 0;
  while (cursor < header.size()) {
    const std::string prefix = "u_c" + std::to_string(n_contents + 1) + "_";
    for (Eigen::Index k = 1; k <= n_states; ++k, ++cursor) {
      if (cursor >= header.size() ||
          header[cursor] != prefix + std::to_string(k)) {
        throw std::runtime_error("field csv: malformed decomposition columns");
      }
    }
    ++n_contents;
  }
  if (doc.steady_state && doc.steady_state->size() != n_states) {
    throw std::runtime_error("field csv: steady state has wrong length");
  }
  for (std::size_t row = pos + 1; row < lines.size(); ++row) {
    const std::string where = "field csv row " + std::to_string(row + 1);
    const std::vector<std::string> fields = split_csv(lines[row]);
    if (fields.size() != header.size()) {
      throw std::runtime_error(where + ": wrong field count");
    }
    FieldDocument::Row entry;
    entry.point.resize(n_states);
    entry.field.resize(n_states);
    std::size_t at = 0;
    for (Eigen::Index k = 0; k < n_states; ++k) {
      entry.point[k] = parse_double(fields[at++], where);
    }
    for (Eigen::Index k = 0; k < n_states; ++k) {
      entry.field[k] = parse_double(fields[at++], where);
    }
    if (n_contents > 0) {
      std::vector<Vector> parts;
      parts.reserve(static_cast<std::size_t>(n_contents));
      for (Eigen::Index l = 0; l < n_contents; ++l) {
        Vector part(n_states);
        for (Eigen::Index k = 0; k < n_states; ++k) {
          part[k] = parse_double(fields[at++], where);
        }
        parts.push_back(std::move(part));
      }
      entry.decomposition = std::move(parts);
    }
    doc.rows.push_back(std::move(entry));
  }
  return doc;
}

void write_field_json(std::ostream& out,
                      const std::vector<FieldSample>& samples,
                      const std::optional<Vector>& steady_state) {
  Eigen::Index n_states = 0;
  Eigen::Index n_contents = 0;
  check_field_samples(samples, steady_state, n_states, n_contents);
  nlohmann::json doc;
  if (steady_state) {
    doc["steady_state"] = vector_to_json(*steady_state);
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& sample : samples) {
    nlohmann::json entry;
    entry["point"] = vector_to_json(sample.point.vec());
    entry["field"] = vector_to_json(sample.field);
    if (sample.decomposition) {
      nlohmann::json parts = nlohmann::json::array();
      for (const auto& part : *sample.decomposition) {
        parts.push_back(vector_to_json(part));
      }
      entry["decomposition"] = std::move(parts);
    }
    rows.push_back(std::move(entry));
  }
  doc["samples"] = std::move(rows);
  dump_document(out, doc);
}

FieldDocument read_field_json(std::istream& in) {
  const nlohmann::json parsed = parse_json(in, "field document");
  require_keys(parsed, {"samples"}, {"steady_state"}, "field document");
  FieldDocument doc;
  if (parsed.contains("steady_state")) {
    doc.steady_state =
        vector_from_json(parsed["steady_state"], "field steady_state");
  }
  if (!parsed["samples"].is_array()) {
    throw std::runtime_error("field document: 'samples' must be an array");
  }
  for (const auto& entry : parsed["samples"]) {
    require_keys(entry, {"point", "field"}, {"decomposition"},
                 "field sample");
    FieldDocument::Row row;
    row.point = vector_from_json(entry["point"], "field sample point");
    row.field = vector_from_json(entry["field"], "field sample field");
    if (entry.contains("decomposition")) {
      std::vector<Vector> parts;
      for (const auto& part : entry["decomposition"]) {
        parts.push_back(vector_from_json(part, "field sample decomposition"));
      }
      row.decomposition = std::move(parts);
    }
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

SteadyRecord steady_record(const SteadyStateResult& result) {
  return SteadyRecord{result.eta_star.vec(), result.iterations,
                      result.residual, steady_method_name(result.method)};
}

void write_steady_json(std::ostream& out, const SteadyDocument& doc) {
  nlohmann::json j = steady_record_to_json(doc.primary);
  if (doc.cross_check) {
    j["cross_check"] = steady_record_to_json(*doc.cross_check);
  }
  if (doc.max_abs_diff) {
    j["max_abs_diff"] = round_sig12(*doc.max_abs_diff);
  }
  dump_document(out, j);
}

SteadyDocument read_steady_json(std::istream& in) {
  const nlohmann::json parsed = parse_json(in, "steady document");
  SteadyDocument doc;
  doc.primary = steady_record_from_json(parsed, "steady document",
                                        {"cross_check", "max_abs_diff"});
  if (parsed.contains("cross_check")) {
    doc.cross_check =
        steady_record_from_json(parsed["cross_check"], "steady cross_check");
  }
  if (parsed.contains("max_abs_diff")) {
    doc.max_abs_diff = parsed["max_abs_diff"].get<double>();
  }
  return doc;
}

void write_spectrum_json(std::ostream& out, const SpectralReport& report) {
  nlohmann::json doc;
  nlohmann::json values = nlohmann::json::array();
  for (double v : report.eigenvalue_moduli) values.push_back(round_sig12(v));
  doc["eigenvalues_sorted"] = std::move(values);
  doc["second_largest"] = round_sig12(report.second_largest_modulus);
  doc["closed_form"] = report.second_largest_closed_form
                           ? nlohmann::json(round_sig12(
                                 *report.second_largest_closed_form))
                           : nlohmann::json(nullptr);
  doc["agreement"] = report.closed_form_agrees
                         ? nlohmann::json(*report.closed_form_agrees)
                         : nlohmann::json(nullptr);
  dump_document(out, doc);
}

SpectrumDocument read_spectrum_json(std::istream& in) {
  const nlohmann::json parsed = parse_json(in, "spectrum document");
  require_keys(parsed,
               {"eigenvalues_sorted", "second_largest", "closed_form",
                "agreement"},
               {}, "spectrum document");
  SpectrumDocument doc;
  for (const auto& v : parsed["eigenvalues_sorted"]) {
    doc.eigenvalues_sorted.push_back(v.get<double>());
  }
  doc.second_largest = parsed["second_largest"].get<double>();
  if (!parsed["closed_form"].is_null()) {
    doc.closed_form = parsed["closed_form"].get<double>();
  }
  if (!parsed["agreement"].is_null()) {
    doc.agreement = parsed["agreement"].get<bool>();
  }
  return doc;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "request_index,content,hit,state\n";
  for (const auto& record : trajectory.records) {
    out << (record.request_index + 1) << ',' << (record.content + 1) << ','
        << (record.hit ? 1 : 0) << ','
        << (record.state_index < 0 ? 0 : record.state_index + 1) << '\n';
  }
}

namespace {

TraceRecord trace_record_from_values(long long request_index,
                                     long long content, long long hit,
                                     long long state,
                                     const std::string& where) {
  if (request_index < 1) {
    throw std::runtime_error(where + ": request_index must be >= 1");
  }
  if (content < 1) {
    throw std::runtime_error(where + ": content id must be >= 1");
  }
  if (hit != 0 && hit != 1) {
    throw std::runtime_error(where + ": hit flag must be 0 or 1");
  }
  if (state < 0) {
    throw std::runtime_error(where + ": state id must be >= 0");
  }
  return TraceRecord{static_cast<std::uint64_t>(request_index - 1),
                     static_cast<int>(content - 1), hit == 1,
                     state == 0 ? -1 : static_cast<std::int64_t>(state - 1)};
}

}  // namespace

Trajectory read_trajectory_csv(std::istream& in) {
  const std::vector<std::string> lines = read_lines(in);
  if (lines.empty() || lines[0] != "request_index,content,hit,state") {
    throw std::runtime_error("trajectory csv: malformed header");
  }
  Trajectory trajectory;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::string where = "trajectory csv row " + std::to_string(row + 1);
    const std::vector<std::string> fields = split_csv(lines[row]);
    if (fields.size() != 4) {
      throw std::runtime_error(where + ": wrong field count");
    }
    trajectory.records.push_back(trace_record_from_values(
        parse_integer(fields[0], where), parse_integer(fields[1], where),
        parse_integer(fields[2], where), parse_integer(fields[3], where),
        where));
  }
  return trajectory;
}

void write_trajectory_json(std::ostream& out, const Trajectory& trajectory) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& record : trajectory.records) {
    records.push_back(nlohmann::json::array(
        {record.request_index + 1, record.content + 1, record.hit ? 1 : 0,
         record.state_index < 0 ? 0 : record.state_index + 1}));
  }
  nlohmann::json doc;
  doc["records"] = std::move(records);
  dump_document(out, doc);
}

Trajectory read_trajectory_json(std::istream& in) {
  const nlohmann::json parsed = parse_json(in, "trajectory document");
  require_keys(parsed, {"records"}, {}, "trajectory document");
  Trajectory trajectory;
  std::size_t row = 0;
  for (const auto& entry : parsed["records"]) {
    const std::string where = "trajectory record " + std::to_string(++row);
    if (!entry.is_array() || entry.size() != 4) {
      throw std::runtime_error(
          where + ": expected [request_index, content, hit, state]");
    }
    trajectory.records.push_back(trace_record_from_values(
        entry[0].get<long long>(), entry[1].get<long long>(),
        entry[2].get<long long>(), entry[3].get<long long>(), where));
  }
  return trajectory;
}

void write_ccp_csv(std::ostream& out, const CcpEstimate& estimate) {
  out << "# rounds," << estimate.rounds << '\n';
  out << "request_index,content,value\n";
  for (Eigen::Index i = 0; i < estimate.ccp.rows(); ++i) {
    for (std::size_t j = 0; j < estimate.tracked.size(); ++j) {
      out << (i + 1) << ',' << (estimate.tracked[j] + 1) << ','
          << format_g12(estimate.ccp(i, static_cast<Eigen::Index>(j)))
          << '\n';
    }
  }
}

CcpEstimate read_ccp_csv(std::istream& in) {
  const std::vector<std::string> lines = read_lines(in);
  std::size_t pos = 0;
  CcpEstimate estimate;
  estimate.rounds = 0;
  if (!lines.empty() && lines[0].rfind("# rounds,", 0) == 0) {
    estimate.rounds = static_cast<std::uint64_t>(parse_integer(
        lines[0].substr(std::string("# rounds,").size()), "ccp csv rounds"));
    pos = 1;
  }
  if (pos >= lines.size() || lines[pos] != "request_index,content,value") {
    throw std::runtime_error("ccp csv: malformed header");
  }
  std::vector<std::vector<double>> rows;
  for (std::size_t row = pos + 1; row < lines.size(); ++row) {
    const std::string where = "ccp csv row " + std::to_string(row + 1);
    const std::vector<std::string> fields = split_csv(lines[row]);
    if (fields.size() != 3) {
      throw std::runtime_error(where + ": wrong field count");
    }
    const long long request = parse_integer(fields[0], where);
    const long long content = parse_integer(fields[1], where);
    const double value = parse_double(fields[2], where);
    if (request < 1 || content < 1) {
      throw std::runtime_error(where + ": indices must be >= 1");
    }
    if (request > static_cast<long long>(rows.size()) + 1) {
      throw std::runtime_error(where + ": request indices must be contiguous");
    }
    if (request == static_cast<long long>(rows.size()) + 1) {
      rows.emplace_back();
    }
    if (rows.size() == 1) {
      estimate.tracked.push_back(static_cast<int>(content - 1));
    } else {
      const std::size_t at = rows.back().size();
      if (at >= estimate.tracked.size() ||
          estimate.tracked[at] != static_cast<int>(content - 1)) {
        throw std::runtime_error(where +
                                 ": tracked contents differ across requests");
      }
    }
    rows.back().push_back(value);
  }
  if (rows.empty()) {
    throw std::runtime_error("ccp csv: no data rows");
  }
  const std::size_t width = estimate.tracked.size();
  for (const auto& row : rows) {
    if (row.size() != width) {
      throw std::runtime_error("ccp csv: ragged request blocks");
    }
  }
  estimate.ccp.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      estimate.ccp(static_cast<Eigen::Index>(i),
                   static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return estimate;
}

void write_ccp_json(std::ostream& out, const CcpEstimate& estimate) {
  nlohmann::json doc;
  nlohmann::json tracked = nlohmann::json::array();
  for (int c : estimate.tracked) tracked.push_back(c + 1);
  doc["tracked"] = std::move(tracked);
  doc["rounds"] = estimate.rounds;
  doc["n_requests"] = estimate.ccp.rows();
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < estimate.ccp.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < estimate.ccp.cols(); ++j) {
      row.push_back(round_sig12(estimate.ccp(i, j)));
    }
    rows.push_back(std::move(row));
  }
  doc["ccp"] = std::move(rows);
  dump_document(out, doc);
}

CcpEstimate read_ccp_json(std::istream& in) {
  const nlohmann::json parsed = parse_json(in, "ccp document");
  require_keys(parsed, {"tracked", "rounds", "n_requests", "ccp"}, {},
               "ccp document");
  CcpEstimate estimate;
  for (const auto& c : parsed["tracked"]) {
    const auto id = c.get<long long>();
    if (id < 1) {
      throw std::runtime_error("ccp document: tracked ids must be >= 1");
    }
    estimate.tracked.push_back(static_cast<int>(id - 1));
  }
  estimate.rounds = parsed["rounds"].get<std::uint64_t>();
  const auto n_requests = parsed["n_requests"].get<Eigen::Index>();
  const auto& rows = parsed["ccp"];
  if (!rows.is_array() ||
      static_cast<Eigen::Index>(rows.size()) != n_requests) {
    throw std::runtime_error("ccp document: 'ccp' must have n_requests rows");
  }
  estimate.ccp.resize(n_requests,
                      static_cast<Eigen::Index>(estimate.tracked.size()));
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != estimate.tracked.size()) {
      throw std::runtime_error("ccp document: row has wrong length");
    }
    Eigen::Index j = 0;
    for (const auto& value : row) {
      estimate.ccp(i, j++) = value.get<double>();
    }
    ++i;
  }
  return estimate;
}

}  // namespace stf
