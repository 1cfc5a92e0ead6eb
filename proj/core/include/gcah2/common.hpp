#pragma once
//
// Project     : gcah2
// Module      : common.hpp
// Description : basic types, error classes and a small parallel loop
//

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace gcah2 {

using Index = std::int32_t;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

// empty table slot, written as "⊥" in the triangle tables
inline constexpr Index none = -1;

enum class BasisKind { constant, linear };

const char* to_string(BasisKind basis);

//
// error hierarchy
//

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// a hard size cap was exceeded
struct SizeLimitError : Error {
  using Error::Error;
};

// argument outside the mathematical domain of an operation
struct DomainError : Error {
  using Error::Error;
};

// invalid numerical parameter (orders, tolerances, admissibility parameter)
struct ParameterError : Error {
  using Error::Error;
};

// invalid index lists and similar caller mistakes
struct ArgumentError : Error {
  using Error::Error;
};

// invalid mesh topology or degenerate geometry
struct MeshError : Error {
  MeshError(const std::string& what, Index triangle = none) : Error(what), triangle(triangle) {}
  Index triangle;  // offending triangle, if any
};

// malformed mesh file
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};

// kernel evaluated on its singularity
struct SingularEvaluationError : Error {
  using Error::Error;
};

// auxiliary quadrature surface too close to the mesh
struct GeometryError : Error {
  using Error::Error;
};

// operation not permitted in the current object state
struct StateError : Error {
  using Error::Error;
};

// dimension mismatch in matrix-vector products
struct DimensionError : Error {
  using Error::Error;
};

//
// parallel loop over [0,n) with dynamic scheduling; threads == 0 selects
// the hardware concurrency
//

inline unsigned resolve_threads(unsigned threads) {
  if (threads == 0) threads = std::thread::hardware_concurrency();
  return threads == 0 ? 1u : threads;
}

template <typename F>
void parallel_for(std::size_t n, F&& body, unsigned threads = 0) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  if (threads > n) threads = static_cast<unsigned>(n);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic_flag failed;
  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        if (!failed.test_and_set()) failure = std::current_exception();
        next.store(n);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace gcah2
