#include "densityshape/rng.hpp"

namespace densityshape {

// SplitMix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t stream)
  : key_(mix64(mix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL)))
{}

StreamRng::result_type StreamRng::operator()()
{
  const std::uint64_t c = counter_++;
  return mix64(key_ ^ mix64(c));
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose)
{
  // FNV-1a over the purpose tag
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : purpose) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return mix64(seed ^ h);
}

} // namespace densityshape
