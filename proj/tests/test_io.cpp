#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "stf/field.hpp"
#include "stf/io.hpp"
#include "stf/schemes.hpp"
#include "stf/sim.hpp"
#include "stf/state_space.hpp"
#include "stf/steady.hpp"
#include "test_util.hpp"

using stf::StateSpace;
using test_util::max_abs;
using test_util::pop;
using test_util::vec;

namespace {

stf::Popularity canonical_pop() { return pop({0.5, 0.29, 0.21}); }

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

template <class Writer>
std::string dump(Writer&& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("numbers format at twelve significant digits") {
  CHECK(stf::format_g12(1.0 / 3.0) == "0.333333333333");
  CHECK(stf::format_g12(0.5) == "0.5");
  CHECK(stf::format_g12(1.0) == "1");
  CHECK(stf::format_g12(0.0) == "0");
  CHECK(stf::format_g12(-2.0) == "-2");
  CHECK(stf::format_g12(1e-5) == "1e-05");

  for (double x : {1.0 / 3.0, 1.0 / 7.0, 2.0 / 3.0, 1.234567890123e-13,
                   -0.123456789012345, 0.0}) {
    const double once = stf::round_sig12(x);
    CHECK(stf::round_sig12(once) == once);
    CHECK(std::stod(stf::format_g12(x)) == once);
    CHECK(std::abs(once - x) <= 5e-12 * std::abs(x));
  }
}

TEST_CASE("key validation pins down document shapes") {
  const nlohmann::json ok = {{"a", 1}, {"b", 2}};
  CHECK_NOTHROW(stf::require_keys(ok, {"a"}, {"b"}, "doc"));
  CHECK_NOTHROW(stf::require_keys(ok, {"a", "b"}, {}, "doc"));
  CHECK_THROWS_WITH_AS(stf::require_keys(ok, {"a", "c"}, {"b"}, "doc"),
                       doctest::Contains("missing required key 'c'"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(stf::require_keys(ok, {"a"}, {}, "doc"),
                       doctest::Contains("unknown key 'b'"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(
      stf::require_keys(nlohmann::json::array(), {}, {}, "doc"),
      doctest::Contains("expected a JSON object"), std::runtime_error);

  std::istringstream bad("not json at all");
  CHECK_THROWS_WITH_AS(stf::parse_json(bad, "somewhere"),
                       doctest::Contains("somewhere"), std::runtime_error);
}

TEST_CASE("vectors survive the JSON round trip") {
  const stf::Vector v = vec({1.0 / 3.0, -2.5, 0.0, 1e-5});
  const nlohmann::json arr = stf::vector_to_json(v);
  const stf::Vector back = stf::vector_from_json(arr, "test vector");
  REQUIRE(back.size() == v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    CHECK(back[i] == stf::round_sig12(v[i]));
  }
  CHECK_THROWS_AS(stf::vector_from_json(nlohmann::json::array(), "empty"),
                  std::runtime_error);
  CHECK_THROWS_AS(stf::vector_from_json(nlohmann::json::object(), "object"),
                  std::runtime_error);
  CHECK_THROWS_AS(
      stf::vector_from_json(nlohmann::json::parse(R"([1, "two"])"), "mixed"),
      std::runtime_error);
}

TEST_CASE("scheme configs parse into the right variants") {
  const stf::Scheme rr =
      stf::scheme_from_json(nlohmann::json::parse(R"({"scheme":"rr","phi":0.3})"));
  CHECK(std::get<stf::RrScheme>(rr).phi == 0.3);

  const stf::Scheme lp = stf::scheme_from_json(nlohmann::json::parse(
      R"({"scheme":"lp","alpha":0.9,"predicted":[0.5,0.29,0.21]})"));
  CHECK(std::get<stf::LpScheme>(lp).alpha == 0.9);
  CHECK(std::get<stf::LpScheme>(lp).predicted.vec() ==
        canonical_pop().vec());

  const stf::Scheme tlp_a = stf::scheme_from_json(nlohmann::json::parse(
      R"({"scheme":"tlp","variant":"A","predicted":[0.5,0.29,0.21]})"));
  CHECK(std::get<stf::TlpScheme>(tlp_a).variant == stf::TlpVariant::kAlways);

  const stf::Scheme tlp_p = stf::scheme_from_json(nlohmann::json::parse(
      R"({"scheme":"tlp","variant":"P","predicted":[0.5,0.29,0.21]})"));
  CHECK(std::get<stf::TlpScheme>(tlp_p).variant ==
        stf::TlpVariant::kProbabilistic);

  const stf::Scheme lru =
      stf::scheme_from_json(nlohmann::json::parse(R"({"scheme":"lru"})"));
  CHECK(std::holds_alternative<stf::LruScheme>(lru));

  // predicted accepts the popularity object form too
  const stf::Scheme lp_zipf = stf::scheme_from_json(nlohmann::json::parse(
      R"({"scheme":"lp","alpha":0.5,
          "predicted":{"kind":"zipf","n_contents":4,"exponent":1.0}})"));
  CHECK(std::get<stf::LpScheme>(lp_zipf).predicted.vec() ==
        stf::zipf_popularity(4, 1.0).vec());

  CHECK_THROWS_WITH_AS(
      stf::scheme_from_json(nlohmann::json::parse(R"({"scheme":"fifo"})")),
      doctest::Contains("unknown scheme"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      stf::scheme_from_json(nlohmann::json::parse(R"({"scheme":"rr"})")),
      doctest::Contains("missing required key 'phi'"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      stf::scheme_from_json(
          nlohmann::json::parse(R"({"scheme":"rr","phi":0.3,"seed":1})")),
      doctest::Contains("unknown key 'seed'"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      stf::scheme_from_json(nlohmann::json::parse(
          R"({"scheme":"tlp","variant":"B","predicted":[0.5,0.5]})")),
      doctest::Contains("unknown variant"), std::runtime_error);
  CHECK_THROWS_AS(stf::scheme_from_json(nlohmann::json::parse(R"({"phi":1})")),
                  std::runtime_error);
  CHECK_THROWS_AS(stf::scheme_from_json(nlohmann::json::parse("[1,2]")),
                  std::runtime_error);
}

TEST_CASE("popularity configs parse in all three spellings") {
  const stf::Popularity zipf = stf::popularity_from_json(nlohmann::json::parse(
      R"({"kind":"zipf","n_contents":4,"exponent":0.8})"));
  CHECK(zipf.vec() == stf::zipf_popularity(4, 0.8).vec());

  const stf::Popularity expl = stf::popularity_from_json(nlohmann::json::parse(
      R"({"kind":"explicit","probabilities":[0.5,0.29,0.21]})"));
  CHECK(expl.vec() == canonical_pop().vec());

  const stf::Popularity bare =
      stf::popularity_from_json(nlohmann::json::parse("[0.5,0.29,0.21]"));
  CHECK(bare.vec() == canonical_pop().vec());

  CHECK_THROWS_WITH_AS(
      stf::popularity_from_json(nlohmann::json::parse(R"({"kind":"uniform"})")),
      doctest::Contains("unknown popularity kind"), std::runtime_error);
  CHECK_THROWS_AS(stf::popularity_from_json(nlohmann::json::parse(
                      R"({"kind":"zipf","n_contents":4})")),
                  std::runtime_error);
  // entries must form a distribution; nothing renormalizes silently
  CHECK_THROWS_AS(
      stf::popularity_from_json(nlohmann::json::parse("[0.5,0.4]")),
      std::invalid_argument);
}

TEST_CASE("state documents round trip through JSON") {
  const StateSpace space = StateSpace::enumerate(4, 2);
  const std::string text =
      dump([&](std::ostream& out) { stf::write_states_json(out, space); });

  // ids are 1-based on disk
  const nlohmann::json raw = nlohmann::json::parse(text);
  CHECK(raw["states"][0] == nlohmann::json::array({1, 2}));
  CHECK(raw["n_states"] == 6);

  std::istringstream in(text);
  const stf::StatesDocument doc = stf::read_states_json(in);
  CHECK(doc.n_contents == 4);
  CHECK(doc.cache_size == 2);
  REQUIRE(doc.states.size() == space.n_states());
  REQUIRE(doc.neighbors.size() == space.n_states());
  for (std::size_t k = 0; k < space.n_states(); ++k) {
    CHECK(doc.states[k] == space.state(k));
    CHECK(doc.neighbors[k] == space.neighbors(k));
  }
  CHECK(doc.cache_state_matrix == space.cache_state_matrix());
}

TEST_CASE("state listings round trip through CSV") {
  const StateSpace space = StateSpace::enumerate(4, 2);
  const std::string text =
      dump([&](std::ostream& out) { stf::write_states_csv(out, space); });
  const std::vector<std::string> lines = lines_of(text);
  REQUIRE(lines.size() == 7);
  CHECK(lines[0] ==
        "state,content_1,content_2,neighbor_1,neighbor_2,neighbor_3,"
        "neighbor_4");
  CHECK(lines[1] == "1,1,2,2,3,4,5");

  std::istringstream in(text);
  const stf::StatesDocument doc = stf::read_states_csv(in);
  CHECK(doc.n_contents == 4);
  CHECK(doc.cache_size == 2);
  REQUIRE(doc.states.size() == space.n_states());
  for (std::size_t k = 0; k < space.n_states(); ++k) {
    CHECK(doc.states[k] == space.state(k));
    CHECK(doc.neighbors[k] == space.neighbors(k));
  }
  CHECK(doc.cache_state_matrix.size() == 0);

  std::istringstream empty("");
  CHECK_THROWS_WITH_AS(stf::read_states_csv(empty),
                       doctest::Contains("empty input"), std::runtime_error);
  std::istringstream bad_ids(
      "state,content_1,content_2,neighbor_1,neighbor_2,neighbor_3,neighbor_4\n"
      "2,1,2,2,3,4,5\n");
  CHECK_THROWS_WITH_AS(stf::read_states_csv(bad_ids),
                       doctest::Contains("count from 1"), std::runtime_error);
}

TEST_CASE("cache state matrices round trip through CSV") {
  const StateSpace space = StateSpace::enumerate(3, 2);
  const std::string text = dump(
      [&](std::ostream& out) { stf::write_cache_state_matrix_csv(out, space); });
  const std::vector<std::string> lines = lines_of(text);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "1,1,0");
  CHECK(lines[1] == "1,0,1");
  CHECK(lines[2] == "0,1,1");
  std::istringstream in(text);
  CHECK(stf::read_cache_state_matrix_csv(in) == space.cache_state_matrix());
}

TEST_CASE("dense matrices round trip through CSV") {
  stf::Matrix m(3, 4);
  m << 1.0 / 3.0, 0.0, -2.5, 1e-5,  //
      4.0, 5.5, -1.0 / 7.0, 0.0,    //
      0.1, 0.2, 0.3, 123456.789;
  const std::string text =
      dump([&](std::ostream& out) { stf::write_matrix_csv(out, m); });
  std::istringstream in(text);
  const stf::Matrix back = stf::read_matrix_csv(in);
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 4);
  CHECK(max_abs(back - m) < 1e-12);
  // a second trip is byte identical
  const std::string again =
      dump([&](std::ostream& out) { stf::write_matrix_csv(out, back); });
  CHECK(again == text);

  std::istringstream ragged("1,2\n3\n");
  CHECK_THROWS_WITH_AS(stf::read_matrix_csv(ragged),
                       doctest::Contains("wrong field count"),
                       std::runtime_error);
  std::istringstream empty("");
  CHECK_THROWS_AS(stf::read_matrix_csv(empty), std::runtime_error);
  std::istringstream garbage("1,abc\n");
  CHECK_THROWS_WITH_AS(stf::read_matrix_csv(garbage),
                       doctest::Contains("not a number"), std::runtime_error);
}

TEST_CASE("square matrices round trip through sparse JSON") {
  const StateSpace space = StateSpace::enumerate(3, 2);
  const stf::Matrix theta =
      stf::overall_matrix(stf::LruScheme{}, space, canonical_pop());
  const std::string text =
      dump([&](std::ostream& out) { stf::write_matrix_json(out, theta); });
  std::istringstream in(text);
  const stf::Matrix back = stf::read_matrix_json(in);
  REQUIRE(back.rows() == theta.rows());
  CHECK(max_abs(back - theta) < 1e-12);
  for (Eigen::Index r = 0; r < theta.rows(); ++r) {
    for (Eigen::Index c = 0; c < theta.cols(); ++c) {
      if (theta(r, c) == 0.0) CHECK(back(r, c) == 0.0);
    }
  }

  std::ostringstream sink;
  CHECK_THROWS_AS(stf::write_matrix_json(sink, stf::Matrix::Zero(2, 3)),
                  std::invalid_argument);
  std::istringstream dup(
      R"({"n_states":2,"triplets":[[1,1,0.5],[1,1,0.5]]})");
  CHECK_THROWS_WITH_AS(stf::read_matrix_json(dup),
                       doctest::Contains("duplicate triplet"),
                       std::runtime_error);
  std::istringstream oob(R"({"n_states":2,"triplets":[[3,1,0.5]]})");
  CHECK_THROWS_WITH_AS(stf::read_matrix_json(oob),
                       doctest::Contains("out of range"), std::runtime_error);
}

TEST_CASE("field documents round trip with and without extras") {
  const StateSpace space = StateSpace::enumerate(3, 2);
  const stf::Popularity upsilon = canonical_pop();
  const stf::RrScheme rr{0.45};
  const std::vector<stf::SimplexPoint> points = stf::barycentric_grid(0.5);
  const std::vector<stf::FieldSample> plain =
      stf::field_snapshot(rr, space, upsilon, points, false);
  const std::vector<stf::FieldSample> decomposed =
      stf::field_snapshot(rr, space, upsilon, points, true);
  const stf::Vector steady =
      stf::scheme_steady_state(rr, space, upsilon).eta_star.vec();

  SUBCASE("csv, plain") {
    const std::string text = dump([&](std::ostream& out) {
      stf::write_field_csv(out, plain, std::nullopt);
    });
    CHECK(lines_of(text)[0] == "eta_1,eta_2,eta_3,u_1,u_2,u_3");
    std::istringstream in(text);
    const stf::FieldDocument doc = stf::read_field_csv(in);
    CHECK_FALSE(doc.steady_state.has_value());
    REQUIRE(doc.rows.size() == plain.size());
    for (std::size_t i = 0; i < plain.size(); ++i) {
      CHECK(max_abs(doc.rows[i].point - plain[i].point.vec()) < 1e-12);
      CHECK(max_abs(doc.rows[i].field - plain[i].field) < 1e-12);
      CHECK_FALSE(doc.rows[i].decomposition.has_value());
    }
  }

  SUBCASE("csv, decomposed with steady state") {
    const std::string text = dump([&](std::ostream& out) {
      stf::write_field_csv(out, decomposed, steady);
    });
    const std::vector<std::string> lines = lines_of(text);
    CHECK(lines[0].rfind("# steady_state,", 0) == 0);
    CHECK(lines[1] ==
          "eta_1,eta_2,eta_3,u_1,u_2,u_3,u_c1_1,u_c1_2,u_c1_3,"
          "u_c2_1,u_c2_2,u_c2_3,u_c3_1,u_c3_2,u_c3_3");
    std::istringstream in(text);
    const stf::FieldDocument doc = stf::read_field_csv(in);
    REQUIRE(doc.steady_state.has_value());
    CHECK(max_abs(*doc.steady_state - steady) < 1e-12);
    REQUIRE(doc.rows.size() == decomposed.size());
    for (std::size_t i = 0; i < decomposed.size(); ++i) {
      REQUIRE(doc.rows[i].decomposition.has_value());
      REQUIRE(doc.rows[i].decomposition->size() == 3);
      for (std::size_t l = 0; l < 3; ++l) {
        CHECK(max_abs((*doc.rows[i].decomposition)[l] -
                      (*decomposed[i].decomposition)[l]) < 1e-12);
      }
    }
  }

  SUBCASE("json, both shapes") {
    const std::string text = dump([&](std::ostream& out) {
      stf::write_field_json(out, decomposed, steady);
    });
    std::istringstream in(text);
    const stf::FieldDocument doc = stf::read_field_json(in);
    REQUIRE(doc.steady_state.has_value());
    CHECK(max_abs(*doc.steady_state - steady) < 1e-12);
    REQUIRE(doc.rows.size() == decomposed.size());
    for (std::size_t i = 0; i < decomposed.size(); ++i) {
      CHECK(max_abs(doc.rows[i].point - decomposed[i].point.vec()) < 1e-12);
      CHECK(max_abs(doc.rows[i].field - decomposed[i].field) < 1e-12);
      REQUIRE(doc.rows[i].decomposition.has_value());
    }

    const std::string bare = dump([&](std::ostream& out) {
      stf::write_field_json(out, plain, std::nullopt);
    });
    std::istringstream bare_in(bare);
    const stf::FieldDocument bare_doc = stf::read_field_json(bare_in);
    CHECK_FALSE(bare_doc.steady_state.has_value());
    CHECK_FALSE(bare_doc.rows.front().decomposition.has_value());
  }

  SUBCASE("invalid sample sets are rejected") {
    std::ostringstream sink;
    CHECK_THROWS_WITH_AS(stf::write_field_csv(sink, {}, std::nullopt),
                         doctest::Contains("no field samples"),
                         std::invalid_argument);
    const std::vector<stf::FieldSample> mixed = {decomposed[0], plain[1]};
    CHECK_THROWS_WITH_AS(stf::write_field_csv(sink, mixed, std::nullopt),
                         doctest::Contains("not uniform"),
                         std::invalid_argument);
    std::istringstream headerless("0.1,0.2\n");
    CHECK_THROWS_AS(stf::read_field_csv(headerless), std::runtime_error);
  }
}

TEST_CASE("steady documents round trip through JSON") {
  const StateSpace space = StateSpace::enumerate(3, 2);
  const stf::Popularity upsilon = canonical_pop();
  const stf::SteadyStateResult closed =
      stf::scheme_steady_state(stf::RrScheme{0.45}, space, upsilon);
  const stf::SteadyStateResult power = stf::steady_state_power(
      stf::overall_matrix(stf::RrScheme{0.45}, space, upsilon),
      stf::uniform_simplex_point(3));

  stf::SteadyDocument doc;
  doc.primary = stf::steady_record(closed);
  doc.cross_check = stf::steady_record(power);
  doc.max_abs_diff = max_abs(closed.eta_star.vec() - power.eta_star.vec());

  const std::string text =
      dump([&](std::ostream& out) { stf::write_steady_json(out, doc); });
  std::istringstream in(text);
  const stf::SteadyDocument back = stf::read_steady_json(in);
  CHECK(back.primary.method == "rr-closed-form");
  CHECK(back.primary.iterations == 0);
  CHECK(max_abs(back.primary.eta_star - closed.eta_star.vec()) < 1e-12);
  REQUIRE(back.cross_check.has_value());
  CHECK(back.cross_check->method == "power-iteration");
  CHECK(back.cross_check->iterations == power.iterations);
  REQUIRE(back.max_abs_diff.has_value());
  CHECK(*back.max_abs_diff == stf::round_sig12(*doc.max_abs_diff));

  stf::SteadyDocument primary_only;
  primary_only.primary = stf::steady_record(closed);
  const std::string bare = dump(
      [&](std::ostream& out) { stf::write_steady_json(out, primary_only); });
  std::istringstream bare_in(bare);
  const stf::SteadyDocument bare_back = stf::read_steady_json(bare_in);
  CHECK_FALSE(bare_back.cross_check.has_value());
  CHECK_FALSE(bare_back.max_abs_diff.has_value());

  std::istringstream missing(R"({"eta_star":[1,0],"iterations":0})");
  CHECK_THROWS_WITH_AS(stf::read_steady_json(missing),
                       doctest::Contains("missing required key"),
                       std::runtime_error);
}

TEST_CASE("spectrum documents round trip through JSON") {
  const StateSpace space = StateSpace::enumerate(3, 2);
  const stf::Popularity upsilon = canonical_pop();
  const stf::LpScheme lp{0.9, upsilon};
  const stf::SpectralReport lp_report = stf::spectral_report(
      stf::overall_matrix(lp, space, upsilon), lp, space);
  const std::string text = dump(
      [&](std::ostream& out) { stf::write_spectrum_json(out, lp_report); });
  std::istringstream in(text);
  const stf::SpectrumDocument doc = stf::read_spectrum_json(in);
  REQUIRE(doc.eigenvalues_sorted.size() == 3);
  CHECK(doc.eigenvalues_sorted[0] ==
        stf::round_sig12(lp_report.eigenvalue_moduli[0]));
  CHECK(doc.second_largest ==
        stf::round_sig12(lp_report.second_largest_modulus));
  REQUIRE(doc.closed_form.has_value());
  CHECK(*doc.closed_form == doctest::Approx(0.739).epsilon(1e-9));
  REQUIRE(doc.agreement.has_value());
  CHECK(*doc.agreement);

  const stf::SpectralReport rr_report = stf::spectral_report(
      stf::overall_matrix(stf::RrScheme{0.45}, space, upsilon));
  const std::string rr_text = dump(
      [&](std::ostream& out) { stf::write_spectrum_json(out, rr_report); });
  CHECK(nlohmann::json::parse(rr_text)["closed_form"].is_null());
  std::istringstream rr_in(rr_text);
  const stf::SpectrumDocument rr_doc = stf::read_spectrum_json(rr_in);
  CHECK_FALSE(rr_doc.closed_form.has_value());
  CHECK_FALSE(rr_doc.agreement.has_value());
}

TEST_CASE("trajectories round trip and keep unknown states") {
  const StateSpace space = StateSpace::enumerate(3, 2);
  const stf::Trajectory traj = stf::run_trace(
      stf::LruScheme{}, canonical_pop(), 2, {}, 40, 3, &space);
  REQUIRE(traj.records.front().state_index == -1);

  const std::string csv = dump(
      [&](std::ostream& out) { stf::write_trajectory_csv(out, traj); });
  const std::vector<std::string> lines = lines_of(csv);
  CHECK(lines[0] == "request_index,content,hit,state");
  // the first request misses an empty cache whose state is still unknown
  CHECK(lines[1] == "1," + std::to_string(traj.records[0].content + 1) +
                        ",0,0");

  std::istringstream csv_in(csv);
  const stf::Trajectory csv_back = stf::read_trajectory_csv(csv_in);
  const std::string json_text = dump(
      [&](std::ostream& out) { stf::write_trajectory_json(out, traj); });
  std::istringstream json_in(json_text);
  const stf::Trajectory json_back = stf::read_trajectory_json(json_in);

  for (const stf::Trajectory* back : {&csv_back, &json_back}) {
    REQUIRE(back->records.size() == traj.records.size());
    for (std::size_t i = 0; i < traj.records.size(); ++i) {
      CHECK(back->records[i].request_index == traj.records[i].request_index);
      CHECK(back->records[i].content == traj.records[i].content);
      CHECK(back->records[i].hit == traj.records[i].hit);
      CHECK(back->records[i].state_index == traj.records[i].state_index);
    }
  }

  std::istringstream bad_header("request,content,hit,state\n1,1,0,0\n");
  CHECK_THROWS_AS(stf::read_trajectory_csv(bad_header), std::runtime_error);
  std::istringstream bad_hit(
      "request_index,content,hit,state\n1,1,2,0\n");
  CHECK_THROWS_WITH_AS(stf::read_trajectory_csv(bad_hit),
                       doctest::Contains("hit flag"), std::runtime_error);
  std::istringstream bad_index(
      "request_index,content,hit,state\n0,1,0,0\n");
  CHECK_THROWS_WITH_AS(stf::read_trajectory_csv(bad_index),
                       doctest::Contains("request_index"),
                       std::runtime_error);
}

TEST_CASE("caching probability estimates round trip") {
  const stf::CcpEstimate est = stf::ccp_trajectory(
      stf::RrScheme{0.45}, canonical_pop(), 2, 50, 8, {0, 2}, 5);

  const std::string csv =
      dump([&](std::ostream& out) { stf::write_ccp_csv(out, est); });
  const std::vector<std::string> lines = lines_of(csv);
  CHECK(lines[0] == "# rounds,50");
  CHECK(lines[1] == "request_index,content,value");
  CHECK(lines[2].rfind("1,1,", 0) == 0);
  CHECK(lines[3].rfind("1,3,", 0) == 0);

  std::istringstream csv_in(csv);
  const stf::CcpEstimate csv_back = stf::read_ccp_csv(csv_in);
  CHECK(csv_back.tracked == est.tracked);
  CHECK(csv_back.rounds == est.rounds);
  REQUIRE(csv_back.ccp.rows() == est.ccp.rows());
  CHECK(max_abs(csv_back.ccp - est.ccp) < 1e-12);

  const std::string json_text =
      dump([&](std::ostream& out) { stf::write_ccp_json(out, est); });
  std::istringstream json_in(json_text);
  const stf::CcpEstimate json_back = stf::read_ccp_json(json_in);
  CHECK(json_back.tracked == est.tracked);
  CHECK(json_back.rounds == est.rounds);
  CHECK(max_abs(json_back.ccp - est.ccp) < 1e-12);

  std::istringstream inconsistent(
      "# rounds,2\nrequest_index,content,value\n"
      "1,1,0.5\n1,3,0.25\n2,1,0.5\n2,2,0.25\n");
  CHECK_THROWS_WITH_AS(stf::read_ccp_csv(inconsistent),
                       doctest::Contains("differ across requests"),
                       std::runtime_error);
  std::istringstream no_rows("# rounds,2\nrequest_index,content,value\n");
  CHECK_THROWS_WITH_AS(stf::read_ccp_csv(no_rows),
                       doctest::Contains("no data rows"), std::runtime_error);
}

TEST_SUITE_END();
