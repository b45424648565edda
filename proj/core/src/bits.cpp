#include "coordc/bits.hpp"

#include <charconv>

#include "coordc/errors.hpp"

namespace coordc {

bool Message::bit(std::size_t i) const {
  if (i >= nbits_) throw param_error("bit index out of range");
  return (bytes_[i >> 3] >> (i & 7)) & 1;
}

void Message::append_bit(bool b) {
  if ((nbits_ & 7) == 0) bytes_.push_back(0);
  if (b) bytes_.back() |= static_cast<std::uint8_t>(1u << (nbits_ & 7));
  ++nbits_;
}

void Message::append_field(u128 value, unsigned width) {
  if (width > 128) throw param_error("field width exceeds 128 bits");
  if (width < 128 && (value >> width) != 0) throw param_error("field value does not fit width");
  for (unsigned i = 0; i < width; ++i) append_bit(((value >> i) & 1) != 0);
}

std::string Message::to_hex() const {
  static const char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes_.size() * 2);
  for (std::uint8_t b : bytes_) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 15]);
  }
  return out;
}

namespace {
int hex_val(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

Message Message::from_hex(std::string_view hex, std::size_t nbits) {
  if (hex.size() % 2 != 0) throw param_error("hex string must have even length");
  std::size_t nbytes = hex.size() / 2;
  if (nbits > nbytes * 8 || (nbits + 7) / 8 != nbytes)
    throw param_error("hex length inconsistent with bit count");
  Message m;
  m.bytes_.resize(nbytes);
  for (std::size_t i = 0; i < nbytes; ++i) {
    int hi = hex_val(hex[2 * i]), lo = hex_val(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw param_error("invalid hex digit");
    m.bytes_[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  // Padding bits beyond nbits must be zero so equal messages have equal bytes.
  for (std::size_t i = nbits; i < nbytes * 8; ++i)
    if ((m.bytes_[i >> 3] >> (i & 7)) & 1) throw param_error("nonzero padding bits");
  m.nbits_ = nbits;
  return m;
}

std::string Message::to_string() const { return std::to_string(nbits_) + ":" + to_hex(); }

Message Message::parse(std::string_view s) {
  auto colon = s.find(':');
  if (colon == std::string_view::npos) throw param_error("expected '<nbits>:<hex>'");
  std::size_t nbits = 0;
  auto head = s.substr(0, colon);
  auto res = std::from_chars(head.data(), head.data() + head.size(), nbits);
  if (res.ec != std::errc() || res.ptr != head.data() + head.size())
    throw param_error("bad bit count in message string");
  return from_hex(s.substr(colon + 1), nbits);
}

bool BitReader::read_bit() {
  if (pos_ >= msg_->bit_length()) throw param_error("read past end of message");
  return msg_->bit(pos_++);
}

u128 BitReader::read_field(unsigned width) {
  if (width > 128) throw param_error("field width exceeds 128 bits");
  u128 v = 0;
  for (unsigned i = 0; i < width; ++i)
    if (read_bit()) v |= u128{1} << i;
  return v;
}

unsigned bit_width_u128(u128 v) {
  unsigned w = 0;
  while (v != 0) {
    ++w;
    v >>= 1;
  }
  return w;
}

}  // namespace coordc
