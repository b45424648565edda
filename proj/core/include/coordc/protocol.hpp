#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <vector>

#include "coordc/bits.hpp"
#include "coordc/errors.hpp"
#include "coordc/report.hpp"
#include "coordc/rng.hpp"
#include "coordc/util.hpp"

namespace coordc {

/// One two-stage run: the coordinator encodes a message from the full instance,
/// then every agent decodes its action from its own private slice plus the
/// message. Decoders never see the instance, which is what makes the
/// agent-isolation property hold by construction.
template <class Instance, class Slice, class Action>
struct ProtocolRun {
  Message message;
  std::vector<Action> actions;
  ProtocolReport report;
};

template <class Instance, class Slice, class Action>
ProtocolRun<Instance, Slice, Action> run_protocol(
    const std::function<Message(const Instance&, Rng&)>& encode,
    const std::function<Slice(const Instance&, std::size_t)>& slice_of,
    const std::function<Action(const Slice&, const Message&, Rng&)>& decode,
    const Instance& instance, std::size_t n_agents, std::uint64_t seed,
    const std::function<double(const Instance&, const std::vector<Action>&)>& objective = {},
    std::optional<double> opt_value = std::nullopt) {
  auto t0 = std::chrono::steady_clock::now();

  Rng coord = coordinator_stream(seed);
  ProtocolRun<Instance, Slice, Action> run;
  run.message = encode(instance, coord);

  run.actions.resize(n_agents);
  std::vector<std::exception_ptr> failures(n_agents);
  parallel_for(n_agents, [&](std::size_t i) {
    try {
      Slice s = slice_of(instance, i);
      Rng agent = agent_stream(seed, i);
      run.actions[i] = decode(s, run.message, agent);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  });
  for (std::size_t i = 0; i < n_agents; ++i) {
    if (failures[i]) {
      try {
        std::rethrow_exception(failures[i]);
      } catch (const std::exception& e) {
        throw decode_error(i, e.what());
      }
    }
  }

  double obj = objective ? objective(instance, run.actions) : 0.0;
  auto t1 = std::chrono::steady_clock::now();
  double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  run.report = make_report(run.message.bit_length(), obj, opt_value, seed, ms);
  return run;
}

}  // namespace coordc
