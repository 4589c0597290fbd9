#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rheo::data {

enum class PolymerKind { Homopolymer, Copolymer, Blend };

std::string_view to_string(PolymerKind kind);
PolymerKind parse_kind(std::string_view text);

struct Constituent {
  std::string smiles;
  double fraction = 1.0;
  std::optional<double> mw;   // per-unit weight-average Mw, blends only
  std::optional<double> pdi;  // per-unit PDI, blends only
};

/// One viscosity measurement after ingestion.
struct PolymerSample {
  std::string record_id;
  PolymerKind kind = PolymerKind::Homopolymer;
  std::vector<Constituent> constituents;
  std::vector<double> fingerprint;
  double mw = 0.0;             // g/mol
  std::optional<double> pdi;   // empty until imputed
  bool pdi_imputed = false;
  double temp = 0.0;           // K
  double shear = 0.0;          // 1/s
  double log10_eta = 0.0;
  bool augmented = false;

  /// SMILES of the majority constituent; the unit used for monomer splits.
  const std::string& monomer() const;
  /// PDI for model input; throws InvariantViolation when still missing.
  double pdi_value() const;
};

using Dataset = std::vector<PolymerSample>;

// ---------------------------------------------------------------------------
// Fingerprints

inline constexpr std::size_t kFallbackFingerprintWidth = 128;

/// Hashed character 2- and 3-gram counts, L2-normalised. Deterministic
/// across platforms (FNV-1a buckets). Throws EmptySmiles.
std::vector<double> fallback_fingerprint(std::string_view smiles);

struct WeightedFingerprint {
  std::span<const double> values;
  double weight;
};

struct AggregatedFingerprint {
  std::vector<double> values;
  /// Blend components that fell back to the arithmetic mean because some
  /// constituent was non-positive there.
  std::vector<std::size_t> arithmetic_fallback;
};

/// Copolymers: weighted arithmetic mean. Blends: weighted harmonic mean,
/// per component, where every constituent is positive; other components
/// use the arithmetic mean unless `strict`, which throws
/// NonPositiveComponent instead.
AggregatedFingerprint aggregate_fingerprint(
    std::span<const WeightedFingerprint> units, PolymerKind kind,
    bool strict = false);

// ---------------------------------------------------------------------------
// Ingestion

struct LoadReport {
  std::size_t rows = 0;
  std::vector<std::string> warnings;
};

/// Reads the dataset CSV. Rows sharing a record_id are merged into one
/// multi-constituent sample. Throws EmptyDataset, ParseError or
/// InvariantViolation.
Dataset load_dataset(const std::filesystem::path& path,
                     LoadReport* report = nullptr);
Dataset parse_dataset(std::istream& in, LoadReport* report = nullptr);

/// Writes the ingested form: one row per record, aggregated fingerprint in
/// fp_* columns, plus pdi_imputed/augmented flags that loaders ignore.
void write_dataset(std::ostream& out, const Dataset& samples);

// ---------------------------------------------------------------------------
// Curation

inline constexpr double kMedianPdi = 2.06;

/// Fills missing PDI with `value` and flags it. Returns how many changed.
std::size_t impute_pdi(Dataset& samples, double value = kMedianPdi);

/// Median of the recorded (non-imputed) PDI values. Throws EmptyInput.
double median_pdi(const Dataset& samples);

struct AugmentOptions {
  std::size_t points_per_chemistry = 5;
  double min_mw = 1e2;           // g/mol, low end of the emitted grid
  double mcr_fraction = 0.5;     // grid ends at mcr_fraction * Mcr
  double alpha1 = 1.0;           // slope of the extrapolated branch
  std::size_t min_points = 6;    // strictly more than five entangled points
};

/// Fits the entangled branch of one zero-shear Mw series (samples at one
/// temperature) above `mcr` and emits points on the continuity-matched
/// unentangled branch. Throws MissingMcr or TooFewPoints.
Dataset augment_chemistry(const Dataset& series, std::optional<double> mcr,
                          const AugmentOptions& options = {});

struct AugmentResult {
  Dataset added;
  std::vector<std::string> skipped;  // "monomer@T: reason"
};

/// Runs augment_chemistry over every (monomer, temperature) zero-shear
/// series with a known Mcr, skipping series that do not qualify.
AugmentResult augment_low_mw(const Dataset& samples,
                             const std::map<std::string, double>& mcr_by_monomer,
                             const AugmentOptions& options = {});

/// Distinct monomers in first-seen order.
std::vector<std::string> monomers(const Dataset& samples);

}  // namespace rheo::data
