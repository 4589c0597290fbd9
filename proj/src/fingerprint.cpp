#include <cmath>
#include <cstdint>
#include <string>

#include "rheo/data.hpp"
#include "rheo/errors.hpp"

namespace rheo::data {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<double> fallback_fingerprint(std::string_view smiles) {
  if (smiles.empty()) throw EmptySmiles("fallback fingerprint needs a SMILES string");
  std::vector<double> fp(kFallbackFingerprintWidth, 0.0);
  for (std::size_t n : {2u, 3u}) {
    if (smiles.size() < n) continue;
    for (std::size_t i = 0; i + n <= smiles.size(); ++i) {
      fp[fnv1a(smiles.substr(i, n)) % kFallbackFingerprintWidth] += 1.0;
    }
  }
  double norm = 0.0;
  for (double v : fp) norm += v * v;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& v : fp) v /= norm;
  }
  return fp;
}

AggregatedFingerprint aggregate_fingerprint(
    std::span<const WeightedFingerprint> units, PolymerKind kind,
    bool strict) {
  if (units.empty()) throw EmptyInput("no fingerprints to aggregate");
  const std::size_t width = units.front().values.size();
  double total = 0.0;
  for (const auto& u : units) {
    if (u.values.size() != width) {
      throw DimensionMismatch("constituent fingerprints differ in width");
    }
    total += u.weight;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw ValidationError("fingerprint weights sum to " + std::to_string(total));
  }

  AggregatedFingerprint out;
  out.values.assign(width, 0.0);
  for (std::size_t j = 0; j < width; ++j) {
    double arithmetic = 0.0;
    bool positive = true;
    for (const auto& u : units) {
      arithmetic += u.weight * u.values[j];
      positive = positive && u.values[j] > 0.0;
    }
    if (kind != PolymerKind::Blend || units.size() == 1) {
      out.values[j] = arithmetic;
      continue;
    }
    if (!positive) {
      if (strict) {
        throw NonPositiveComponent("component " + std::to_string(j) +
                                   " is not positive in every constituent");
      }
      out.values[j] = arithmetic;
      out.arithmetic_fallback.push_back(j);
      continue;
    }
    double inv = 0.0;
    for (const auto& u : units) inv += u.weight / u.values[j];
    out.values[j] = 1.0 / inv;
  }
  return out;
}

}  // namespace rheo::data
