#include "trafficmon/rng.hpp"

#include <cmath>
#include <cstring>

namespace trafficmon {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t mix_u64(std::uint64_t h, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  return fnv1a64(std::string_view(buf, 8), h);
}

}  // namespace

Rng Rng::stream(std::uint64_t seed, std::string_view a, std::string_view b, std::uint64_t index) {
  std::uint64_t h = mix_u64(0xcbf29ce484222325ull, seed);
  h = fnv1a64(a, h);
  h = fnv1a64("\x1f", h);
  h = fnv1a64(b, h);
  h = mix_u64(h, index);
  return Rng(splitmix64(h));
}

int Rng::uniform_int(int lo, int hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return lo + static_cast<int>(v % span);
}

double Rng::exponential(double mean) {
  // Inverse CDF; 1 - u is in (0, 1] so log() never sees zero.
  return -mean * std::log(1.0 - next_double());
}

int Rng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  // Split large means so Knuth's product never underflows exp(-mean).
  if (mean > 30.0) {
    const double half = mean / 2.0;
    return poisson(half) + poisson(mean - half);
  }
  const double limit = std::exp(-mean);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= next_double();
  } while (p > limit);
  return k - 1;
}

}  // namespace trafficmon
