#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace sphereflow {

// Philox4x32-10 counter-based generator. Output depends only on (key, counter),
// so any stream can be addressed directly without sequencing.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key);
};

// Uniform double in (0,1) built from two 32-bit words (53 bits).
double uniform_open(std::uint32_t hi, std::uint32_t lo);

// Uniform point on S^2 addressed by (seed, stream, index); one Philox block each.
std::array<double, 3> uniform_sphere_point(std::uint64_t seed, std::uint32_t stream, std::uint32_t index);

// Two independent standard normals from one Philox block (Box-Muller).
std::array<double, 2> normal_pair(const Philox4x32::Counter& ctr, const Philox4x32::Key& key);

// Addresses a stream of standard normals by (seed, replica, stream, step, slot).
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint32_t replica, std::uint32_t stream);

  // Fills out[i] with the normal at slot i for the given step.
  void fill(std::uint64_t step, std::span<double> out) const;

 private:
  Philox4x32::Key key_;
  std::uint32_t replica_;
  std::uint32_t stream_;
};

}  // namespace sphereflow
