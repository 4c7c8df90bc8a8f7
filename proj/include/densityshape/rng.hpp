#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace densityshape {

//! Counter-based 64-bit generator. Each (seed, stream) pair names an
//! independent sequence; output k is a bijective mix of (key, k), so streams
//! can be created in any order on any thread and still agree with a serial
//! run.
class StreamRng
{
public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max()
  {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

//! Derives a sub-seed for a named purpose ("bootstrap", "restart", ...) so
//! one user seed can feed several unrelated stream families.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose);

} // namespace densityshape
