#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coordc/bits.hpp"

namespace coordc {

struct CounterEvent {
  std::uint64_t step = 0;  // 1-based position in the stream
  bool plus = false;
};

/// Sparse compression of an integer stream: the running count jumps by +-r
/// whenever it drifts r away from the true prefix sum. Reconstructed counts
/// stay within r of the prefix sum at every step.
struct CounterTranscript {
  std::vector<CounterEvent> updates;  // steps strictly increasing
  std::uint64_t refinement = 1;       // r, positive integer
  std::uint64_t horizon = 0;          // T

  void validate() const;  // throws param_error on malformed transcripts
};

/// Online encoder. Symbols must be in {-1, 0, 1}; the stream may be shorter
/// than the horizon.
CounterTranscript approx_count(std::span<const int> stream, std::uint64_t r,
                               std::uint64_t horizon);

struct CounterTrace {
  CounterTranscript transcript;
  std::vector<long long> counts;  // the encoder's internal C, one per stream step
};
CounterTrace approx_count_trace(std::span<const int> stream, std::uint64_t r,
                                std::uint64_t horizon);

/// Reconstruction over the full horizon: C(p) = r * (#plus <= p) - r * (#minus <= p).
std::vector<long long> extract_count(const CounterTranscript& t);

/// O(log #events) point lookups, for decoders that only need a few positions.
class CountIndex {
 public:
  explicit CountIndex(const CounterTranscript& t);
  long long at(std::uint64_t step) const;  // count after position `step` (0 = start)

 private:
  std::vector<std::uint64_t> steps_;
  std::vector<long long> values_;
};

/// Wire format: 32-bit event count, then per event ceil(log2(T+1)) step bits
/// plus one sign bit (1 = plus).
void append_transcript(Message& msg, const CounterTranscript& t);
CounterTranscript read_transcript(BitReader& reader, std::uint64_t r, std::uint64_t horizon);
std::size_t transcript_bits(std::size_t num_events, std::uint64_t horizon);

}  // namespace coordc
