#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace coordc {

using u128 = unsigned __int128;

/// An exact bit string broadcast by a coordinator. Lengths are counted in bits,
/// never byte-padded; padding appears only at file-serialization boundaries and
/// is not part of the length. Bit order within an appended field is
/// little-endian: the first bit written is the field's least significant bit.
class Message {
 public:
  Message() = default;

  std::size_t bit_length() const { return nbits_; }
  bool empty() const { return nbits_ == 0; }

  bool bit(std::size_t i) const;

  void append_bit(bool b);
  void append_field(u128 value, unsigned width);

  /// Lowercase hex of the underlying bytes, final partial byte zero-padded.
  std::string to_hex() const;
  static Message from_hex(std::string_view hex, std::size_t nbits);

  /// "<nbits>:<hex>"; the inverse of parse().
  std::string to_string() const;
  static Message parse(std::string_view s);

  bool operator==(const Message&) const = default;

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t nbits_ = 0;
};

class BitReader {
 public:
  explicit BitReader(const Message& m) : msg_(&m) {}
  bool read_bit();
  u128 read_field(unsigned width);
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return msg_->bit_length() - pos_; }

 private:
  const Message* msg_;
  std::size_t pos_ = 0;
};

inline std::size_t message_bits(const Message& m) { return m.bit_length(); }

/// Bits needed to store every value in 0..v, i.e. ceil(log2(v + 1)).
unsigned bit_width_u128(u128 v);
inline unsigned bit_width_u64(std::uint64_t v) { return bit_width_u128(v); }

}  // namespace coordc
