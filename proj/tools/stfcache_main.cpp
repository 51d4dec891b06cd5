#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stf/field.hpp"
#include "stf/io.hpp"
#include "stf/schemes.hpp"
#include "stf/sim.hpp"
#include "stf/state_space.hpp"
#include "stf/steady.hpp"

namespace {

using nlohmann::json;

struct GlobalOptions {
  std::string config_path;
  std::string out_path = "-";
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::vector<std::string> overrides;
};

void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
  for (const std::string& entry : overrides) {
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::runtime_error("--set expects key=value, got '" + entry + "'");
    }
    std::string key = entry.substr(0, eq);
    std::replace(key.begin(), key.end(), '.', '/');
    const std::string raw = entry.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;  // unparseable values are taken as strings
    }
    doc[json::json_pointer("/" + key)] = std::move(value);
  }
}

json load_config(const GlobalOptions& opts) {
  json doc = json::object();
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) {
      throw std::runtime_error("cannot open config '" + opts.config_path +
                               "'");
    }
    doc = stf::parse_json(in, "config '" + opts.config_path + "'");
  }
  apply_overrides(doc, opts.overrides);
  return doc;
}

void write_output(const std::string& path,
                  const std::function<void(std::ostream&)>& writer) {
  if (path == "-") {
    writer(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  writer(out);
  out.flush();
  if (!out) {
    throw std::runtime_error("failed while writing '" + path + "'");
  }
}

void require_json_format(const GlobalOptions& opts, const std::string& what) {
  if (opts.format != "json") {
    throw std::runtime_error(what + " output is json only; use --format json");
  }
}

std::string companion_path(const std::string& path, const std::string& tag) {
  const std::size_t slash = path.find_last_of('/');
  const std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos ||
      (slash != std::string::npos && dot < slash)) {
    return path + tag;
  }
  return path.substr(0, dot) + tag + path.substr(dot);
}

std::uint64_t get_u64(const json& value, const std::string& where) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_number_integer() && value.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(value.get<std::int64_t>());
  }
  throw std::runtime_error(where + ": expected a nonnegative integer");
}

int get_positive_int(const json& value, const std::string& where) {
  if (!value.is_number_integer() || value.get<std::int64_t>() < 1 ||
      value.get<std::int64_t>() > std::numeric_limits<int>::max()) {
    throw std::runtime_error(where + ": expected a positive integer");
  }
  return value.get<int>();
}

std::uint64_t resolve_seed(const GlobalOptions& opts, const json& cfg) {
  if (opts.seed) return *opts.seed;
  if (cfg.contains("seed")) return get_u64(cfg["seed"], "config seed");
  throw std::runtime_error(
      "a seed is required: pass --seed or put \"seed\" in the config");
}

stf::Popularity config_popularity(const json& cfg) {
  return stf::popularity_from_json(cfg.at("popularity"));
}

int config_cache_size(const json& cfg) {
  return get_positive_int(cfg.at("cache_size"), "config cache_size");
}

std::vector<int> external_contents(const json& arr, int n_contents,
                                   const std::string& where) {
  if (!arr.is_array()) {
    throw std::runtime_error(where + ": expected an array of content ids");
  }
  std::vector<int> contents;
  for (const auto& entry : arr) {
    const long long id = entry.get<long long>();
    if (id < 1 || id > n_contents) {
      throw std::runtime_error(where + ": content id out of range: " +
                               std::to_string(id));
    }
    contents.push_back(static_cast<int>(id - 1));
  }
  return contents;
}

void cmd_states(const GlobalOptions& opts, const json& cfg) {
  stf::require_keys(cfg, {"n_contents", "cache_size"}, {"seed"},
                    "states config");
  const stf::StateSpace space = stf::StateSpace::enumerate(
      get_positive_int(cfg["n_contents"], "config n_contents"),
      config_cache_size(cfg));
  if (opts.format == "json") {
    write_output(opts.out_path,
                 [&](std::ostream& out) { stf::write_states_json(out, space); });
    return;
  }
  if (opts.out_path == "-") {
    throw std::runtime_error(
        "csv states output writes a listing plus a cache-state-matrix file; "
        "pass --out with a path");
  }
  write_output(opts.out_path,
               [&](std::ostream& out) { stf::write_states_csv(out, space); });
  write_output(companion_path(opts.out_path, "_cs"), [&](std::ostream& out) {
    stf::write_cache_state_matrix_csv(out, space);
  });
}

std::vector<stf::SimplexPoint> config_points(const GlobalOptions& opts,
                                             const json& cfg,
                                             const stf::StateSpace& space) {
  const json& points = cfg.at("points");
  if (!points.is_object() || !points.contains("kind") ||
      !points["kind"].is_string()) {
    throw std::runtime_error("points config: expected an object with a 'kind'");
  }
  const std::string kind = points["kind"].get<std::string>();
  if (kind == "grid") {
    stf::require_keys(points, {"kind", "step"}, {}, "grid points config");
    if (space.n_states() != 3) {
      throw std::runtime_error(
          "the barycentric grid is only defined for 3-state spaces; use "
          "dirichlet sampling");
    }
    return stf::barycentric_grid(points["step"].get<double>());
  }
  if (kind == "dirichlet") {
    stf::require_keys(points, {"kind", "count"}, {"seed"},
                      "dirichlet points config");
    const std::uint64_t seed = points.contains("seed")
                                   ? get_u64(points["seed"], "points seed")
                                   : resolve_seed(opts, cfg);
    return stf::sample_domain(space.n_states(),
                              get_u64(points["count"], "points count"), seed);
  }
  if (kind == "explicit") {
    stf::require_keys(points, {"kind", "points"}, {},
                      "explicit points config");
    std::vector<stf::SimplexPoint> result;
    for (const auto& entry : points["points"]) {
      stf::Vector v = stf::vector_from_json(entry, "explicit point");
      if (static_cast<std::size_t>(v.size()) != space.n_states()) {
        throw std::runtime_error("explicit point has wrong length");
      }
      result.emplace_back(std::move(v));
    }
    if (result.empty()) {
      throw std::runtime_error("explicit points config: no points given");
    }
    return result;
  }
  throw std::runtime_error("unknown points kind '" + kind + "'");
}

void cmd_field(const GlobalOptions& opts, const json& cfg, bool decompose) {
  stf::require_keys(cfg, {"scheme", "popularity", "cache_size", "points"},
                    {"decompose", "seed"}, "field config");
  const stf::Popularity popularity = config_popularity(cfg);
  const stf::Scheme scheme = stf::scheme_from_json(cfg.at("scheme"));
  const stf::StateSpace space = stf::StateSpace::enumerate(
      static_cast<int>(popularity.size()), config_cache_size(cfg));
  if (cfg.contains("decompose")) {
    decompose = decompose || cfg["decompose"].get<bool>();
  }
  const std::vector<stf::SimplexPoint> points =
      config_points(opts, cfg, space);
  const std::vector<stf::FieldSample> samples =
      stf::field_snapshot(scheme, space, popularity, points, decompose);
  const stf::Vector steady =
      stf::scheme_steady_state(scheme, space, popularity).eta_star.vec();
  write_output(opts.out_path, [&](std::ostream& out) {
    if (opts.format == "json") {
      stf::write_field_json(out, samples, steady);
    } else {
      stf::write_field_csv(out, samples, steady);
    }
  });
}

void cmd_steady(const GlobalOptions& opts, const json& cfg) {
  require_json_format(opts, "steady");
  stf::require_keys(cfg, {"scheme", "popularity", "cache_size"},
                    {"method", "eta0", "tol", "max_iter", "seed"},
                    "steady config");
  const stf::Popularity popularity = config_popularity(cfg);
  const stf::Scheme scheme = stf::scheme_from_json(cfg.at("scheme"));
  const stf::StateSpace space = stf::StateSpace::enumerate(
      static_cast<int>(popularity.size()), config_cache_size(cfg));
  const std::string method =
      cfg.contains("method") ? cfg["method"].get<std::string>() : "auto";
  const double tol = cfg.contains("tol") ? cfg["tol"].get<double>() : 1e-12;
  const std::uint64_t max_iter =
      cfg.contains("max_iter") ? get_u64(cfg["max_iter"], "config max_iter")
                               : 10000000;
  const auto eta0 = [&]() -> stf::SimplexPoint {
    if (!cfg.contains("eta0")) {
      return stf::uniform_simplex_point(
          static_cast<Eigen::Index>(space.n_states()));
    }
    stf::Vector v = stf::vector_from_json(cfg["eta0"], "config eta0");
    return stf::SimplexPoint(std::move(v));
  }();

  const auto power = [&] {
    const stf::Matrix theta = stf::overall_matrix(scheme, space, popularity);
    return stf::steady_state_power(theta, eta0, tol, max_iter);
  };
  const auto* lp = std::get_if<stf::LpScheme>(&scheme);
  const auto* tlp = std::get_if<stf::TlpScheme>(&scheme);

  stf::SteadyDocument doc;
  std::optional<stf::SteadyStateResult> primary;
  std::optional<stf::SteadyStateResult> cross;
  if (method == "power") {
    primary = power();
  } else if (method == "closed-form") {
    if (!std::holds_alternative<stf::RrScheme>(scheme)) {
      throw std::runtime_error(
          "the closed-form method applies to the rr scheme only");
    }
    primary = stf::steady_state_rr_closed_form(space, popularity);
  } else if (method == "absorbing") {
    if (lp == nullptr && tlp == nullptr) {
      throw std::runtime_error(
          "the absorbing method applies to the lp and tlp schemes only");
    }
    primary = stf::steady_state_absorbing(
        space, lp != nullptr ? lp->predicted : tlp->predicted);
  } else if (method == "auto") {
    if (std::holds_alternative<stf::RrScheme>(scheme)) {
      primary = stf::steady_state_rr_closed_form(space, popularity);
      cross = power();
    } else if (lp != nullptr || tlp != nullptr) {
      primary = power();
      cross = stf::steady_state_absorbing(
          space, lp != nullptr ? lp->predicted : tlp->predicted);
    } else {
      primary = power();
    }
  } else {
    throw std::runtime_error("unknown steady method '" + method + "'");
  }
  doc.primary = stf::steady_record(*primary);
  if (cross) {
    doc.cross_check = stf::steady_record(*cross);
    doc.max_abs_diff = (primary->eta_star.vec() - cross->eta_star.vec())
                           .lpNorm<Eigen::Infinity>();
  }
  write_output(opts.out_path,
               [&](std::ostream& out) { stf::write_steady_json(out, doc); });
}

void cmd_spectrum(const GlobalOptions& opts, const json& cfg) {
  require_json_format(opts, "spectrum");
  stf::require_keys(cfg, {"scheme", "popularity", "cache_size"}, {"seed"},
                    "spectrum config");
  const stf::Popularity popularity = config_popularity(cfg);
  const stf::Scheme scheme = stf::scheme_from_json(cfg.at("scheme"));
  const stf::StateSpace space = stf::StateSpace::enumerate(
      static_cast<int>(popularity.size()), config_cache_size(cfg));
  const stf::Matrix theta = stf::overall_matrix(scheme, space, popularity);
  const stf::SpectralReport report =
      stf::spectral_report(theta, scheme, space);
  write_output(opts.out_path, [&](std::ostream& out) {
    stf::write_spectrum_json(out, report);
  });
}

void cmd_simulate(const GlobalOptions& opts, const json& cfg) {
  if (!cfg.contains("kind") || !cfg["kind"].is_string()) {
    throw std::runtime_error(
        "simulate config: 'kind' must be one of trace, empirical-theta, "
        "empirical-stf");
  }
  const std::string kind = cfg["kind"].get<std::string>();
  const stf::Popularity popularity = config_popularity(cfg);
  const stf::Scheme scheme = stf::scheme_from_json(cfg.at("scheme"));
  const int cache_size = config_cache_size(cfg);
  const int n_contents = static_cast<int>(popularity.size());

  if (kind == "trace") {
    stf::require_keys(cfg,
                      {"kind", "scheme", "popularity", "cache_size",
                       "n_requests"},
                      {"initial", "record_states", "seed"}, "trace config");
    std::vector<int> initial;
    if (cfg.contains("initial")) {
      initial = external_contents(cfg["initial"], n_contents,
                                  "trace initial contents");
    }
    std::optional<stf::StateSpace> space;
    if (cfg.contains("record_states") && cfg["record_states"].get<bool>()) {
      space = stf::StateSpace::enumerate(n_contents, cache_size);
    }
    const stf::Trajectory trajectory = stf::run_trace(
        scheme, popularity, cache_size, initial,
        get_u64(cfg["n_requests"], "config n_requests"),
        resolve_seed(opts, cfg), space ? &*space : nullptr);
    write_output(opts.out_path, [&](std::ostream& out) {
      if (opts.format == "json") {
        stf::write_trajectory_json(out, trajectory);
      } else {
        stf::write_trajectory_csv(out, trajectory);
      }
    });
    return;
  }
  if (kind == "empirical-theta") {
    stf::require_keys(cfg,
                      {"kind", "scheme", "popularity", "cache_size",
                       "samples_per_state"},
                      {"seed"}, "empirical-theta config");
    const stf::StateSpace space =
        stf::StateSpace::enumerate(n_contents, cache_size);
    const stf::Matrix theta = stf::empirical_theta(
        scheme, popularity, space,
        get_u64(cfg["samples_per_state"], "config samples_per_state"),
        resolve_seed(opts, cfg), opts.threads);
    write_output(opts.out_path, [&](std::ostream& out) {
      if (opts.format == "json") {
        stf::write_matrix_json(out, theta);
      } else {
        stf::write_matrix_csv(out, theta);
      }
    });
    return;
  }
  if (kind == "empirical-stf") {
    stf::require_keys(cfg,
                      {"kind", "scheme", "popularity", "cache_size", "eta",
                       "m_realizations", "r_requests", "mode"},
                      {"seed"}, "empirical-stf config");
    const stf::StateSpace space =
        stf::StateSpace::enumerate(n_contents, cache_size);
    stf::Vector eta_vec = stf::vector_from_json(cfg["eta"], "config eta");
    if (static_cast<std::size_t>(eta_vec.size()) != space.n_states()) {
      throw std::runtime_error("config eta has wrong length");
    }
    const std::string mode = cfg["mode"].get<std::string>();
    if (mode != "categorical" && mode != "trace") {
      throw std::runtime_error("unknown estimator mode '" + mode + "'");
    }
    stf::SimplexPoint eta(std::move(eta_vec));
    const stf::Vector field = stf::empirical_stf(
        scheme, popularity, space, eta,
        get_u64(cfg["m_realizations"], "config m_realizations"),
        get_u64(cfg["r_requests"], "config r_requests"),
        resolve_seed(opts, cfg),
        mode == "categorical" ? stf::StfEstimatorMode::kCategorical
                              : stf::StfEstimatorMode::kTrace);
    const std::vector<stf::FieldSample> samples = {
        stf::FieldSample{std::move(eta), field, std::nullopt}};
    write_output(opts.out_path, [&](std::ostream& out) {
      if (opts.format == "json") {
        stf::write_field_json(out, samples, std::nullopt);
      } else {
        stf::write_field_csv(out, samples, std::nullopt);
      }
    });
    return;
  }
  throw std::runtime_error("unknown simulate kind '" + kind + "'");
}

void cmd_ccp(const GlobalOptions& opts, const json& cfg) {
  stf::require_keys(cfg,
                    {"scheme", "popularity", "cache_size", "n_rounds",
                     "n_requests", "tracked_contents"},
                    {"seed"}, "ccp config");
  const stf::Popularity popularity = config_popularity(cfg);
  const stf::Scheme scheme = stf::scheme_from_json(cfg.at("scheme"));
  const std::vector<int> tracked =
      external_contents(cfg["tracked_contents"],
                        static_cast<int>(popularity.size()),
                        "tracked contents");
  const stf::CcpEstimate estimate = stf::ccp_trajectory(
      scheme, popularity, config_cache_size(cfg),
      get_u64(cfg["n_rounds"], "config n_rounds"),
      get_u64(cfg["n_requests"], "config n_requests"), tracked,
      resolve_seed(opts, cfg), opts.threads);
  write_output(opts.out_path, [&](std::ostream& out) {
    if (opts.format == "json") {
      stf::write_ccp_json(out, estimate);
    } else {
      stf::write_ccp_csv(out, estimate);
    }
  });
}

void cmd_compare(const GlobalOptions& opts, const json& cfg) {
  require_json_format(opts, "compare");
  stf::require_keys(cfg, {"popularity", "cache_size"}, {"seed"},
                    "compare config");
  const stf::Popularity popularity = config_popularity(cfg);
  const stf::StateSpace space = stf::StateSpace::enumerate(
      static_cast<int>(popularity.size()), config_cache_size(cfg));
  const stf::SteadyStateResult rr =
      stf::steady_state_rr_closed_form(space, popularity);
  const stf::Matrix theta_lru =
      stf::overall_matrix(stf::LruScheme{}, space, popularity);
  const stf::SteadyStateResult lru = stf::steady_state_power(
      theta_lru, stf::uniform_simplex_point(theta_lru.rows()));
  const stf::Vector delta = lru.eta_star.vec() - rr.eta_star.vec();
  const stf::Vector lru_field = stf::field_at(theta_lru, rr.eta_star);
  const std::size_t top =
      stf::sort_states_by_predicted_mass(space, popularity).back();

  json doc;
  doc["eta_star_rr"] = stf::vector_to_json(rr.eta_star.vec());
  doc["eta_star_lru"] = stf::vector_to_json(lru.eta_star.vec());
  doc["delta_lru_minus_rr"] = stf::vector_to_json(delta);
  doc["lru_field_at_rr_steady"] = stf::vector_to_json(lru_field);
  json top_state;
  top_state["index"] = top + 1;
  json contents = json::array();
  for (int c : space.state(top)) contents.push_back(c + 1);
  top_state["contents"] = std::move(contents);
  top_state["delta"] =
      stf::round_sig12(delta[static_cast<Eigen::Index>(top)]);
  top_state["lru_field_component"] =
      stf::round_sig12(lru_field[static_cast<Eigen::Index>(top)]);
  doc["top_state"] = std::move(top_state);
  write_output(opts.out_path,
               [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "exact state-transition analysis and simulation of cache replacement "
      "schemes"};
  app.require_subcommand(1);
  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "JSON experiment config file");
  app.add_option("--out", opts.out_path, "output path, '-' for stdout")
      ->capture_default_str();
  app.add_option("--format", opts.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--seed", opts.seed, "seed override (beats the config)");
  app.add_option("--threads", opts.threads, "worker threads for simulation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--set", opts.overrides,
                 "config override as dotted.key=value, repeatable");

  auto* states =
      app.add_subcommand("states", "enumerate the cache state space");
  auto* field =
      app.add_subcommand("field", "evaluate the transition field at points");
  bool decompose = false;
  field->add_flag("--decompose", decompose, "add per-content field columns");
  auto* steady = app.add_subcommand("steady", "compute the steady state");
  auto* spectrum =
      app.add_subcommand("spectrum", "eigenvalue convergence diagnostics");
  auto* simulate = app.add_subcommand(
      "simulate", "trace, empirical-theta, or empirical-stf experiments");
  auto* ccp = app.add_subcommand(
      "ccp", "per-request caching probabilities from repeated rounds");
  auto* compare = app.add_subcommand(
      "compare", "steady-state and field contrast of lru against rr");
  for (auto* sub : {states, field, steady, spectrum, simulate, ccp, compare}) {
    sub->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);
  try {
    const json cfg = load_config(opts);
    if (states->parsed()) {
      cmd_states(opts, cfg);
    } else if (field->parsed()) {
      cmd_field(opts, cfg, decompose);
    } else if (steady->parsed()) {
      cmd_steady(opts, cfg);
    } else if (spectrum->parsed()) {
      cmd_spectrum(opts, cfg);
    } else if (simulate->parsed()) {
      cmd_simulate(opts, cfg);
    } else if (ccp->parsed()) {
      cmd_ccp(opts, cfg);
    } else if (compare->parsed()) {
      cmd_compare(opts, cfg);
    }
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << '\n';
    return 1;
  }
  return 0;
}
