#include "sphereflow/rng.hpp"

#include <cmath>
#include <numbers>

namespace sphereflow {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter c, Key k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

double uniform_open(std::uint32_t hi, std::uint32_t lo) {
  // 52 bits: with 53, (m + 0.5) * 2^-53 can round up to exactly 1.
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 20) ^ (lo >> 12);
  const std::uint64_t m = bits & ((std::uint64_t{1} << 52) - 1);
  return (static_cast<double>(m) + 0.5) * 0x1.0p-52;
}

std::array<double, 2> normal_pair(const Philox4x32::Counter& ctr, const Philox4x32::Key& key) {
  const auto r = Philox4x32::generate(ctr, key);
  const double u1 = uniform_open(r[0], r[1]);
  const double u2 = uniform_open(r[2], r[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  return {rad * std::cos(ang), rad * std::sin(ang)};
}

NormalStream::NormalStream(std::uint64_t seed, std::uint32_t replica, std::uint32_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      replica_(replica),
      stream_(stream) {}

void NormalStream::fill(std::uint64_t step, std::span<double> out) const {
  // Counter = (slot pair, step low, step high ^ stream, replica).
  const auto step_lo = static_cast<std::uint32_t>(step);
  const auto step_hi = static_cast<std::uint32_t>(step >> 32);
  const std::size_t n = out.size();
  for (std::size_t p = 0; 2 * p < n; ++p) {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(p), step_lo,
                                  step_hi ^ (stream_ << 16), replica_};
    const auto z = normal_pair(ctr, key_);
    out[2 * p] = z[0];
    if (2 * p + 1 < n) out[2 * p + 1] = z[1];
  }
}

std::array<double, 3> uniform_sphere_point(std::uint64_t seed, std::uint32_t stream, std::uint32_t index) {
  const auto z = Philox4x32::generate({0u, 0u, stream, index},
                                      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  const double zc = 2.0 * uniform_open(z[0], z[1]) - 1.0;
  const double ph = 2.0 * std::numbers::pi * uniform_open(z[2], z[3]);
  const double r = std::sqrt(1.0 - zc * zc);
  return {r * std::cos(ph), r * std::sin(ph), zc};
}

}  // namespace sphereflow
