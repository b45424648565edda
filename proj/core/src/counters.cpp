#include "coordc/counters.hpp"

#include <algorithm>

#include "coordc/errors.hpp"

namespace coordc {

void CounterTranscript::validate() const {
  if (refinement == 0) throw param_error("refinement must be a positive integer");
  std::uint64_t prev = 0;
  for (const auto& e : updates) {
    if (e.step == 0 || e.step <= prev) throw param_error("event steps must be strictly increasing");
    if (e.step > horizon) throw param_error("event step exceeds horizon");
    prev = e.step;
  }
}

CounterTranscript approx_count(std::span<const int> stream, std::uint64_t r,
                               std::uint64_t horizon) {
  return approx_count_trace(stream, r, horizon).transcript;
}

CounterTrace approx_count_trace(std::span<const int> stream, std::uint64_t r,
                                std::uint64_t horizon) {
  if (r == 0) throw param_error("refinement must be a positive integer");
  if (stream.size() > horizon) throw param_error("stream longer than horizon");

  CounterTrace out;
  out.transcript.refinement = r;
  out.transcript.horizon = horizon;
  out.counts.reserve(stream.size());

  long long count = 0;
  long long prefix = 0;
  const long long jump = static_cast<long long>(r);
  for (std::size_t t = 0; t < stream.size(); ++t) {
    int sym = stream[t];
    if (sym < -1 || sym > 1) throw param_error("stream symbol outside {-1, 0, 1}");
    prefix += sym;
    long long drift = count - prefix;
    if (drift <= -jump) {
      count += jump;
      out.transcript.updates.push_back({t + 1, true});
    } else if (drift >= jump) {
      count -= jump;
      out.transcript.updates.push_back({t + 1, false});
    }
    out.counts.push_back(count);
  }
  return out;
}

std::vector<long long> extract_count(const CounterTranscript& t) {
  t.validate();
  std::vector<long long> counts(t.horizon, 0);
  long long value = 0;
  std::size_t next = 0;
  const long long jump = static_cast<long long>(t.refinement);
  for (std::uint64_t p = 1; p <= t.horizon; ++p) {
    if (next < t.updates.size() && t.updates[next].step == p) {
      value += t.updates[next].plus ? jump : -jump;
      ++next;
    }
    counts[p - 1] = value;
  }
  return counts;
}

CountIndex::CountIndex(const CounterTranscript& t) {
  t.validate();
  steps_.reserve(t.updates.size());
  values_.reserve(t.updates.size());
  long long value = 0;
  const long long jump = static_cast<long long>(t.refinement);
  for (const auto& e : t.updates) {
    value += e.plus ? jump : -jump;
    steps_.push_back(e.step);
    values_.push_back(value);
  }
}

long long CountIndex::at(std::uint64_t step) const {
  auto it = std::upper_bound(steps_.begin(), steps_.end(), step);
  if (it == steps_.begin()) return 0;
  return values_[static_cast<std::size_t>(it - steps_.begin()) - 1];
}

void append_transcript(Message& msg, const CounterTranscript& t) {
  t.validate();
  const unsigned step_bits = bit_width_u64(t.horizon);
  msg.append_field(static_cast<u128>(t.updates.size()), 32);
  for (const auto& e : t.updates) {
    msg.append_field(static_cast<u128>(e.step), step_bits);
    msg.append_bit(e.plus);
  }
}

CounterTranscript read_transcript(BitReader& reader, std::uint64_t r, std::uint64_t horizon) {
  const unsigned step_bits = bit_width_u64(horizon);
  CounterTranscript t;
  t.refinement = r;
  t.horizon = horizon;
  std::uint64_t count = static_cast<std::uint64_t>(reader.read_field(32));
  t.updates.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    CounterEvent e;
    e.step = static_cast<std::uint64_t>(reader.read_field(step_bits));
    e.plus = reader.read_bit();
    t.updates.push_back(e);
  }
  t.validate();
  return t;
}

std::size_t transcript_bits(std::size_t num_events, std::uint64_t horizon) {
  return 32 + num_events * (bit_width_u64(horizon) + 1);
}

}  // namespace coordc
