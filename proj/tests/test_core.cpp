#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "coordc/convex.hpp"
#include "coordc/errors.hpp"
#include "coordc/matching.hpp"
#include "coordc/protocol.hpp"
#include "coordc/report.hpp"
#include "coordc/rng.hpp"

using namespace coordc;

namespace {

struct MatchSlice {
  std::vector<std::uint8_t> row;
};

MatchSlice slice_row(const MatchingInstance& inst, std::size_t i) {
  return {std::vector<std::uint8_t>(inst.row(i), inst.row(i) + inst.k)};
}

}  // namespace

TEST_CASE("message bit accounting and round trips") {
  Message m;
  CHECK(message_bits(m) == 0);
  m.append_field(0x5a, 7);
  CHECK(message_bits(m) == 7);
  CHECK(m.bit(1));
  CHECK_FALSE(m.bit(0));

  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    Message msg;
    std::vector<std::pair<u128, unsigned>> fields;
    std::size_t count = rng.below(8);
    for (std::size_t f = 0; f < count; ++f) {
      unsigned width = static_cast<unsigned>(rng.below(120));
      u128 value = static_cast<u128>(rng.next());
      value |= static_cast<u128>(rng.next()) << 64;
      if (width < 128) value &= (u128{1} << width) - 1;
      msg.append_field(value, width);
      fields.emplace_back(value, width);
    }
    Message back = Message::parse(msg.to_string());
    CHECK(back == msg);
    BitReader reader(back);
    for (auto [value, width] : fields) CHECK(reader.read_field(width) == value);
  }

  CHECK_THROWS_AS(Message::parse("nonsense"), param_error);
  CHECK_THROWS_AS(Message::from_hex("ff", 3), param_error);  // nonzero padding
}

TEST_CASE("bit widths") {
  CHECK(bit_width_u64(0) == 0);
  CHECK(bit_width_u64(1) == 1);
  CHECK(bit_width_u64(2) == 2);
  CHECK(bit_width_u64(255) == 8);
  CHECK(bit_width_u64(256) == 9);
}

TEST_CASE("report ratio rule") {
  auto r = make_report(10, 4.0, 8.0, 1, 0.0);
  CHECK(r.approximation_ratio == 2.0);
  r = make_report(10, 0.0, 8.0, 1, 0.0);
  CHECK_FALSE(r.approximation_ratio.has_value());
  r = make_report(10, 4.0, std::nullopt, 1, 0.0);
  CHECK_FALSE(r.approximation_ratio.has_value());

  ReportRow row{"match", 4, 2, make_report(12, 3.0, 6.0, 9, 0.0)};
  CHECK(csv_header() == "protocol,n,k_or_m,seed,message_bits,objective,opt,ratio,wall_time_ms");
  CHECK(csv_row(row) == "match,4,2,9,12,3,6,2,0");
  CHECK(json_row(row).find("\"ratio\":2.0") != std::string::npos);
}

TEST_CASE("constant encoder broadcasts zero bits") {
  MatchingInstance inst;
  inst.n = 2;
  inst.k = 2;
  inst.supplies = {1, 1};
  inst.valuations = {1, 0, 0, 1};

  auto run = run_protocol<MatchingInstance, MatchSlice, int>(
      [](const MatchingInstance&, Rng&) { return Message{}; }, slice_row,
      [](const MatchSlice&, const Message&, Rng&) { return -1; }, inst, inst.n, 42);
  CHECK(run.report.message_bits == 0);
  CHECK(run.actions == std::vector<int>{-1, -1});
}

TEST_CASE("identity protocol pays the full description length of the solution") {
  MatchingInstance inst;
  inst.n = 2;
  inst.k = 2;
  inst.supplies = {1, 1};
  inst.valuations = {1, 1, 1, 1};

  struct IndexSlice {
    std::size_t i;
  };
  auto run = run_protocol<MatchingInstance, IndexSlice, int>(
      [](const MatchingInstance& d, Rng&) {
        return encode_assignment(lp_opt(d).assignment, d.k);
      },
      [](const MatchingInstance&, std::size_t i) { return IndexSlice{i}; },
      [&inst](const IndexSlice& s, const Message& m, Rng&) {
        return decode_assignment(m, inst.n, inst.k)[s.i];
      },
      inst, inst.n, 7,
      [](const MatchingInstance& d, const std::vector<int>& actions) {
        return static_cast<double>(capped_welfare(actions, d).value);
      },
      static_cast<double>(lp_opt(inst).value));
  // n fields of ceil(log2(k+1)) bits: 2 * 2.
  CHECK(run.report.message_bits == 4);
  CHECK(run.report.objective_value == 2.0);
  CHECK(run.report.approximation_ratio == 1.0);
}

TEST_CASE("rec protocol replays identically under one seed") {
  auto inst = random_matching_instance(20, 4, 6, 0.4, 3131);
  const double eta = 0.05, eps = 0.1;

  auto encode = [&](const MatchingInstance& d, Rng&) { return rec_protocol(d, eta, eps).message; };
  auto decode = [&](const MatchSlice& s, const Message& m, Rng& rng) {
    const double alpha = rec_alpha(eta, eps, inst.n, inst.k);
    DualVector prices = decode_dual(m, alpha, inst.k);
    auto x = agent_best_response(s.row, prices.lambda, eta);
    double u = rng.uniform();
    double cum = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      cum += x[j];
      if (u < cum) return static_cast<int>(j);
    }
    return -1;
  };
  auto objective = [](const MatchingInstance& d, const std::vector<int>& actions) {
    return static_cast<double>(capped_welfare(actions, d).value);
  };

  auto a = run_protocol<MatchingInstance, MatchSlice, int>(
      encode, slice_row, decode, inst, inst.n, 99, objective,
      static_cast<double>(lp_opt(inst).value));
  auto b = run_protocol<MatchingInstance, MatchSlice, int>(
      encode, slice_row, decode, inst, inst.n, 99, objective,
      static_cast<double>(lp_opt(inst).value));
  CHECK(a.message == b.message);
  CHECK(a.actions == b.actions);
  CHECK(replay_equal(a.report, b.report));

  auto c = run_protocol<MatchingInstance, MatchSlice, int>(
      encode, slice_row, decode, inst, inst.n, 100, objective,
      static_cast<double>(lp_opt(inst).value));
  CHECK(a.message == c.message);  // encoding is deterministic; only rounding seeds move
}

TEST_CASE("agent isolation: perturbing one row never moves another agent's action") {
  auto inst = random_matching_instance(10, 3, 3, 0.5, 88);
  const double eta = 0.05, eps = 0.1;
  auto rec = rec_protocol(inst, eta, eps);

  MatchingInstance perturbed = inst;
  for (std::size_t j = 0; j < inst.k; ++j)
    perturbed.valuations[4 * inst.k + j] ^= 1;  // flip all of row 4

  const double alpha = rec_alpha(eta, eps, inst.n, inst.k);
  DualVector prices = decode_dual(rec.message, alpha, inst.k);
  for (std::size_t i = 0; i < inst.n; ++i) {
    if (i == 4) continue;
    auto xa = agent_best_response({inst.row(i), inst.k}, prices.lambda, eta);
    auto xb = agent_best_response({perturbed.row(i), perturbed.k}, prices.lambda, eta);
    CHECK(xa == xb);
  }
}

TEST_CASE("decoder failures carry the agent index") {
  MatchingInstance inst;
  inst.n = 3;
  inst.k = 1;
  inst.supplies = {1};
  inst.valuations = {1, 1, 1};
  try {
    run_protocol<MatchingInstance, MatchSlice, int>(
        [](const MatchingInstance&, Rng&) { return Message{}; }, slice_row,
        [](const MatchSlice& s, const Message&, Rng&) -> int {
          if (s.row[0] == 1) throw std::runtime_error("boom");
          return -1;
        },
        inst, inst.n, 1);
    FAIL("expected decode_error");
  } catch (const decode_error& e) {
    CHECK(e.agent_index < 3);
    CHECK(std::string(e.what()).find("boom") != std::string::npos);
  }
}

TEST_CASE("rec message length obeys the documented envelope") {
  // Oversubscribed symmetric instance keeps the prices strictly positive.
  MatchingInstance inst;
  inst.n = 500;
  inst.k = 10;
  inst.supplies.assign(10, 25);
  inst.valuations.assign(inst.n * inst.k, 1);
  const double eta = 0.1, eps = 0.1;
  auto rec = rec_protocol(inst, eta, eps);

  const double alpha = rec_alpha(eta, eps, inst.n, inst.k);
  const double sqrt_k = std::sqrt(static_cast<double>(inst.k));
  // Width never exceeds what encoding lambda <= n at this grid would need.
  const double max_multiples = static_cast<double>(inst.n) * sqrt_k / alpha;
  std::size_t cap = 8 + inst.k * static_cast<std::size_t>(
                            std::ceil(std::log2(max_multiples + 1.0)));
  CHECK(rec.message.bit_length() <= cap);
  CHECK(rec.message.bit_length() >= 8);

  // The shape claimed for the price broadcast: at most C * k * log2(nk/(eta eps)).
  const double shape = std::log2(static_cast<double>(inst.n * inst.k) / (eta * eps));
  CHECK(static_cast<double>(rec.message.bit_length()) <=
        4.0 * static_cast<double>(inst.k) * shape + 8.0);
}

TEST_CASE("mutated instance documents never escape as anything but parameter errors") {
  auto inst = random_matching_instance(6, 3, 2, 0.5, 5);
  std::string good = inst.to_json_string();
  Rng rng(404);
  int accepted = 0;
  for (int trial = 0; trial < 400; ++trial) {
    std::string text = good;
    switch (rng.below(4)) {
      case 0:  // truncate
        text.resize(rng.below(text.size()));
        break;
      case 1:  // flip a character
        text[rng.below(text.size())] = static_cast<char>('0' + rng.below(75));
        break;
      case 2:  // delete a span
        text.erase(rng.below(text.size() / 2), rng.below(20));
        break;
      default:  // inject noise
        text.insert(rng.below(text.size()), "\"x\":[1,");
        break;
    }
    try {
      auto parsed = MatchingInstance::from_json_string(text);
      parsed.validate();
      ++accepted;  // a mutation that stayed schema-valid
    } catch (const param_error&) {
      // the only acceptable failure mode
    }
  }
  CHECK(accepted < 400);  // the mutator really does break most documents
}

TEST_CASE("matching instance json carries schema and edges") {
  auto inst = random_matching_instance(6, 3, 2, 0.5, 5);
  auto text = inst.to_json_string();
  CHECK(text.find("\"schema\": \"matching-v1\"") != std::string::npos);
  auto back = MatchingInstance::from_json_string(text);
  CHECK(back.n == inst.n);
  CHECK(back.k == inst.k);
  CHECK(back.supplies == inst.supplies);
  CHECK(back.valuations == inst.valuations);

  CHECK_THROWS_AS(MatchingInstance::from_json_string("{}"), param_error);
  CHECK_THROWS_AS(MatchingInstance::from_json_string("not json"), param_error);
}
