#include "amplify/random.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

namespace amplify {

namespace {

void ensure_sodium() {
  static const bool ready = [] { return sodium_init() >= 0; }();
  if (!ready) throw std::runtime_error("libsodium failed to initialise");
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index) {
  ensure_sodium();
  std::vector<std::uint8_t> msg;
  put_u64(msg, master);
  put_u64(msg, label.size());
  msg.insert(msg.end(), label.begin(), label.end());
  put_u64(msg, index);
  std::uint8_t digest[8];
  crypto_generichash(digest, sizeof digest, msg.data(), msg.size(), nullptr, 0);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{digest[i]} << (8 * i);
  return v;
}

PrfKey prf_key(std::uint64_t seed, std::string_view label) {
  ensure_sodium();
  std::vector<std::uint8_t> msg;
  put_u64(msg, seed);
  msg.insert(msg.end(), label.begin(), label.end());
  PrfKey key{};
  crypto_generichash(key.data(), key.size(), msg.data(), msg.size(), nullptr, 0);
  return key;
}

BitString random_bits(Rng& rng, std::size_t nbits) {
  std::vector<std::uint64_t> words((nbits + 63) / 64);
  for (auto& w : words) w = rng();
  return BitString::from_words(std::move(words), nbits);
}

PrfStream::PrfStream(const PrfKey& key) : key_(key) { ensure_sodium(); }

PrfStream& PrfStream::absorb(const BitString& field) {
  put_u64(message_, field.size());
  for (std::uint64_t w : field.words()) put_u64(message_, w);
  return *this;
}

PrfStream& PrfStream::absorb(std::uint64_t field) {
  put_u64(message_, field);
  return *this;
}

PrfStream& PrfStream::absorb(std::string_view field) {
  put_u64(message_, field.size());
  message_.insert(message_.end(), field.begin(), field.end());
  return *this;
}

BitString PrfStream::expand(std::size_t nbits) const {
  std::uint8_t stream_key[crypto_stream_chacha20_KEYBYTES];
  crypto_generichash(stream_key, sizeof stream_key, message_.data(), message_.size(), key_.data(),
                     key_.size());
  static const std::uint8_t nonce[crypto_stream_chacha20_NONCEBYTES] = {};
  std::vector<std::uint64_t> words((nbits + 63) / 64);
  if (!words.empty()) {
    crypto_stream_chacha20(reinterpret_cast<unsigned char*>(words.data()), words.size() * 8, nonce,
                           stream_key);
  }
  // Keystream bytes are read little-endian into words so bit i of the output
  // is bit (i % 8) of keystream byte i / 8 on every platform.
  for (auto& w : words) {
    std::uint8_t b[8];
    std::memcpy(b, &w, 8);
    w = 0;
    for (int i = 0; i < 8; ++i) w |= std::uint64_t{b[i]} << (8 * i);
  }
  return BitString::from_words(std::move(words), nbits);
}

}  // namespace amplify
