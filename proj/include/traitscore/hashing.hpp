#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace traitscore {

// 64-bit FNV-1a. This is the project's stable content hash: fingerprints for
// prompts, chat requests, configs and datasets all go through it, and cache
// files key on its hex form, so the algorithm must never change silently.
class StableHash {
 public:
  StableHash& update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }

  // Length-prefixed field update so ("ab","c") and ("a","bc") differ.
  StableHash& field(std::string_view bytes) {
    update(std::to_string(bytes.size()));
    update("|");
    update(bytes);
    update("\x1f");
    return *this;
  }

  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string stable_hash_hex(std::string_view bytes);
std::uint64_t stable_hash_u64(std::string_view bytes);

}  // namespace traitscore
