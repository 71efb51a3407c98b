#include "oag/core.hpp"

#include <cmath>
#include <numeric>

namespace oag {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kIllegalAnswer: return "IllegalAnswer";
    case ErrorCode::kEmptyValidSet: return "EmptyValidSet";
    case ErrorCode::kGuideProtocolError: return "GuideProtocolError";
    case ErrorCode::kInvalidParam: return "InvalidParam";
    case ErrorCode::kParse: return "Parse";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kEmptySample: return "EmptySample";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

bool within_bound(Objective objective, double ratio, double bound) {
  return objective == Objective::kMinimize ? ratio <= bound : ratio >= bound;
}

Probability Probability::from_fraction(std::int64_t num, std::int64_t den) {
  if (den <= 0 || num < 0 || num > den) {
    throw Error(ErrorCode::kInvalidParam,
                "probability " + std::to_string(num) + "/" + std::to_string(den) +
                    " outside [0,1]");
  }
  const std::int64_t g = std::gcd(num, den);
  Probability p;
  p.num_ = num / g;
  p.den_ = den / g;
  p.value_ = static_cast<double>(p.num_) / static_cast<double>(p.den_);
  return p;
}

Probability Probability::from_decimal(double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorCode::kInvalidParam,
                "probability " + std::to_string(value) + " outside [0,1]");
  }
  constexpr std::int64_t kGrid = 1'000'000'000;
  return from_fraction(std::llround(value * static_cast<double>(kGrid)), kGrid);
}

OagConfig OagConfig::from_decimal(double beta, double tau) {
  return OagConfig(Probability::from_decimal(beta), Probability::from_decimal(tau));
}

bool RandomStream::bernoulli(const Probability& p) {
  return next_unit() < p.value();
}

double RandomStream::next_unit() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t RandomStream::uniform_index(std::size_t n) {
  // Lemire's multiply-shift with rejection.
  const std::uint64_t range = n;
  std::uint64_t x = engine_();
  unsigned __int128 m = static_cast<unsigned __int128>(x) * range;
  std::uint64_t low = static_cast<std::uint64_t>(m);
  if (low < range) {
    const std::uint64_t threshold = (0 - range) % range;
    while (low < threshold) {
      x = engine_();
      m = static_cast<unsigned __int128>(x) * range;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace oag
