#include "rheo/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rheo/errors.hpp"

namespace rheo::data {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// RFC 4180 style: commas separate, double quotes group, "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

struct Columns {
  std::size_t record_id, kind, mw, pdi, temp, shear, viscosity;
  std::vector<std::size_t> smiles;
  std::vector<std::size_t> fraction;  // npos when absent
  std::vector<std::size_t> fp;
};

constexpr std::size_t kMissing = static_cast<std::size_t>(-1);

Columns map_header(const std::vector<std::string>& header) {
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < header.size(); ++i) pos.emplace(lower(header[i]), i);
  auto need = [&](const std::string& name) {
    auto it = pos.find(name);
    if (it == pos.end()) throw ParseError(1, 0, "missing required column '" + name + "'");
    return it->second;
  };
  Columns c{need("record_id"), need("kind"),  need("mw_gmol"),  need("pdi"),
            need("temp_k"),    need("shear_1_per_s"), need("viscosity"), {}, {}, {}};
  for (std::size_t k = 1;; ++k) {
    auto it = pos.find("smiles_" + std::to_string(k));
    if (it == pos.end()) break;
    c.smiles.push_back(it->second);
    auto f = pos.find("fraction_" + std::to_string(k));
    c.fraction.push_back(f == pos.end() ? kMissing : f->second);
  }
  if (c.smiles.empty()) throw ParseError(1, 0, "missing required column 'smiles_1'");
  for (std::size_t k = 0;; ++k) {
    auto it = pos.find("fp_" + std::to_string(k));
    if (it == pos.end()) break;
    c.fp.push_back(it->second);
  }
  return c;
}

struct Row {
  std::size_t line;
  std::string record_id;
  PolymerKind kind;
  std::vector<Constituent> units;
  double mw;
  std::optional<double> pdi;
  double temp, shear, viscosity;
  std::vector<double> fp;
};

double parse_number(const std::string& field, std::size_t line, std::size_t col,
                    const char* name) {
  double v = 0.0;
  const char* b = field.data();
  const char* e = b + field.size();
  if (!field.empty() && *b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (field.empty() || ec != std::errc() || ptr != e) {
    throw ParseError(line, col, std::string("cannot parse ") + name + " from '" + field + "'");
  }
  if (!std::isfinite(v)) {
    throw ParseError(line, col, std::string(name) + " is not finite");
  }
  return v;
}

Row parse_row(const std::vector<std::string>& f, const Columns& c, std::size_t line) {
  auto at = [&](std::size_t i) -> const std::string& {
    static const std::string empty;
    return i < f.size() ? f[i] : empty;
  };
  Row r;
  r.line = line;
  r.record_id = at(c.record_id);
  if (r.record_id.empty()) throw ParseError(line, c.record_id + 1, "empty record_id");
  try {
    r.kind = parse_kind(at(c.kind));
  } catch (const ValidationError& e) {
    throw ParseError(line, c.kind + 1, e.what());
  }

  std::size_t named = 0;
  for (std::size_t k = 0; k < c.smiles.size(); ++k) {
    if (!at(c.smiles[k]).empty()) ++named;
  }
  for (std::size_t k = 0; k < c.smiles.size(); ++k) {
    const std::string& smi = at(c.smiles[k]);
    if (smi.empty()) continue;
    Constituent u;
    u.smiles = smi;
    const std::string frac = c.fraction[k] == kMissing ? std::string() : at(c.fraction[k]);
    if (frac.empty()) {
      if (named != 1) throw ParseError(line, c.smiles[k] + 1, "fraction required when several SMILES are given");
      u.fraction = 1.0;
    } else {
      u.fraction = parse_number(frac, line, c.fraction[k] + 1, "fraction");
    }
    r.units.push_back(std::move(u));
  }
  if (r.units.empty()) throw ParseError(line, c.smiles.front() + 1, "no SMILES given");

  r.mw = parse_number(at(c.mw), line, c.mw + 1, "mw_gmol");
  if (!at(c.pdi).empty()) r.pdi = parse_number(at(c.pdi), line, c.pdi + 1, "pdi");
  r.temp = parse_number(at(c.temp), line, c.temp + 1, "temp_K");
  r.shear = parse_number(at(c.shear), line, c.shear + 1, "shear_1_per_s");
  r.viscosity = parse_number(at(c.viscosity), line, c.viscosity + 1, "viscosity");

  std::size_t filled = 0;
  for (std::size_t i : c.fp) filled += at(i).empty() ? 0 : 1;
  if (filled != 0 && filled != c.fp.size()) {
    throw ParseError(line, c.fp.front() + 1, "fingerprint columns partially filled");
  }
  if (filled != 0) {
    r.fp.reserve(c.fp.size());
    for (std::size_t i : c.fp) r.fp.push_back(parse_number(at(i), line, i + 1, "fingerprint"));
  }

  const auto& id = r.record_id;
  if (!(r.mw > 0.0)) throw InvariantViolation(id, "Mw must be positive");
  if (r.pdi && *r.pdi < 1.0) throw InvariantViolation(id, "PDI must be >= 1");
  if (!(r.temp > 0.0)) throw InvariantViolation(id, "temperature must be positive");
  if (r.shear < 0.0) throw InvariantViolation(id, "shear rate must be >= 0");
  if (!(r.viscosity > 0.0)) throw InvariantViolation(id, "viscosity must be positive");
  return r;
}

PolymerSample merge_rows(const std::vector<Row>& rows, LoadReport* report) {
  const Row& first = rows.front();
  PolymerSample s;
  s.record_id = first.record_id;
  s.kind = first.kind;
  s.temp = first.temp;
  s.shear = first.shear;
  s.log10_eta = std::log10(first.viscosity);

  for (const Row& r : rows) {
    if (r.kind != s.kind || r.temp != first.temp || r.shear != first.shear ||
        r.viscosity != first.viscosity) {
      throw InvariantViolation(s.record_id, "rows sharing a record_id disagree on kind or conditions (line " +
                                                std::to_string(r.line) + ")");
    }
  }

  std::vector<std::vector<double>> unit_fp;
  if (rows.size() == 1) {
    s.constituents = first.units;
    s.mw = first.mw;
    s.pdi = first.pdi;
  } else {
    // One row per constituent: per-unit Mw/PDI, per-unit fingerprints.
    double mw = 0.0, pdi = 0.0;
    bool all_pdi = true;
    for (const Row& r : rows) {
      if (r.units.size() != 1) {
        throw InvariantViolation(s.record_id, "merged rows must carry one SMILES each");
      }
      Constituent u = r.units.front();
      u.mw = r.mw;
      u.pdi = r.pdi;
      mw += u.fraction * r.mw;
      if (r.pdi) pdi += u.fraction * *r.pdi; else all_pdi = false;
      s.constituents.push_back(std::move(u));
      unit_fp.push_back(r.fp);
    }
    s.mw = mw;
    if (all_pdi) s.pdi = pdi;
  }

  double total = 0.0;
  for (const auto& u : s.constituents) total += u.fraction;
  if (std::abs(total - 1.0) > 1e-6) {
    throw InvariantViolation(s.record_id, "composition fractions sum to " + fmt::format("{}", total));
  }
  for (const auto& u : s.constituents) {
    if (u.fraction < 0.0) throw InvariantViolation(s.record_id, "negative composition fraction");
  }
  if (s.kind == PolymerKind::Homopolymer && s.constituents.size() != 1) {
    throw InvariantViolation(s.record_id, "homopolymer with several constituents");
  }

  // Fingerprint: precomputed aggregate, precomputed per-unit, or fallback.
  if (rows.size() == 1 && !first.fp.empty()) {
    s.fingerprint = first.fp;
    return s;
  }
  const bool have_units = std::all_of(unit_fp.begin(), unit_fp.end(),
                                      [](const auto& v) { return !v.empty(); });
  std::vector<std::vector<double>> fps;
  for (std::size_t i = 0; i < s.constituents.size(); ++i) {
    if (have_units && i < unit_fp.size()) {
      fps.push_back(unit_fp[i]);
    } else {
      fps.push_back(fallback_fingerprint(s.constituents[i].smiles));
    }
  }
  std::vector<WeightedFingerprint> units;
  for (std::size_t i = 0; i < fps.size(); ++i) {
    units.push_back({fps[i], s.constituents[i].fraction});
  }
  auto agg = aggregate_fingerprint(units, s.kind);
  if (!agg.arithmetic_fallback.empty()) {
    const std::string msg = fmt::format(
        "record {}: {} blend fingerprint component(s) used the arithmetic mean",
        s.record_id, agg.arithmetic_fallback.size());
    spdlog::warn(msg);
    if (report) report->warnings.push_back(msg);
  }
  s.fingerprint = std::move(agg.values);
  return s;
}

}  // namespace

std::string_view to_string(PolymerKind kind) {
  switch (kind) {
    case PolymerKind::Homopolymer: return "homopolymer";
    case PolymerKind::Copolymer: return "copolymer";
    case PolymerKind::Blend: return "blend";
  }
  return "homopolymer";
}

PolymerKind parse_kind(std::string_view text) {
  const std::string t = lower(text);
  if (t == "homopolymer") return PolymerKind::Homopolymer;
  if (t == "copolymer") return PolymerKind::Copolymer;
  if (t == "blend") return PolymerKind::Blend;
  throw ValidationError("unknown polymer kind '" + std::string(text) + "'");
}

const std::string& PolymerSample::monomer() const {
  static const std::string none;
  if (constituents.empty()) return none;
  const Constituent* best = &constituents.front();
  for (const auto& u : constituents) {
    if (u.fraction > best->fraction) best = &u;
  }
  return best->smiles;
}

double PolymerSample::pdi_value() const {
  if (!pdi) throw InvariantViolation(record_id, "PDI missing; run imputation first");
  return *pdi;
}

Dataset parse_dataset(std::istream& in, LoadReport* report) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<Columns> cols;
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Row>> groups;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (!cols) {
      cols = map_header(fields);
      continue;
    }
    Row r = parse_row(fields, *cols, line_no);
    auto [it, inserted] = groups.try_emplace(r.record_id);
    if (inserted) order.push_back(r.record_id);
    it->second.push_back(std::move(r));
    ++rows;
  }
  if (rows == 0) throw EmptyDataset("dataset contains no records");

  Dataset out;
  out.reserve(order.size());
  for (const auto& id : order) out.push_back(merge_rows(groups.at(id), report));

  const std::size_t width = out.front().fingerprint.size();
  for (const auto& s : out) {
    if (s.fingerprint.size() != width) {
      throw InvariantViolation(s.record_id, "fingerprint width " + std::to_string(s.fingerprint.size()) +
                                                " differs from dataset width " + std::to_string(width));
    }
  }
  if (report) report->rows = rows;
  return out;
}

Dataset load_dataset(const std::filesystem::path& path, LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset '" + path.string() + "'");
  return parse_dataset(in, report);
}

void write_dataset(std::ostream& out, const Dataset& samples) {
  std::size_t units = 1;
  std::size_t width = 0;
  for (const auto& s : samples) {
    units = std::max(units, s.constituents.size());
    width = std::max(width, s.fingerprint.size());
  }
  out << "record_id,kind";
  for (std::size_t k = 1; k <= units; ++k) out << ",smiles_" << k;
  for (std::size_t k = 1; k <= units; ++k) out << ",fraction_" << k;
  out << ",mw_gmol,pdi,temp_K,shear_1_per_s,viscosity,pdi_imputed,augmented";
  for (std::size_t j = 0; j < width; ++j) out << ",fp_" << j;
  out << '\n';
  for (const auto& s : samples) {
    out << s.record_id << ',' << to_string(s.kind);
    for (std::size_t k = 0; k < units; ++k) {
      out << ',' << (k < s.constituents.size() ? s.constituents[k].smiles : "");
    }
    for (std::size_t k = 0; k < units; ++k) {
      out << ',';
      if (k < s.constituents.size()) out << fmt::format("{}", s.constituents[k].fraction);
    }
    out << ',' << fmt::format("{}", s.mw) << ',';
    if (s.pdi) out << fmt::format("{}", *s.pdi);
    out << ',' << fmt::format("{}", s.temp) << ',' << fmt::format("{}", s.shear) << ','
        << fmt::format("{}", std::pow(10.0, s.log10_eta)) << ',' << (s.pdi_imputed ? 1 : 0)
        << ',' << (s.augmented ? 1 : 0);
    for (double v : s.fingerprint) out << ',' << fmt::format("{}", v);
    out << '\n';
  }
}

std::size_t impute_pdi(Dataset& samples, double value) {
  std::size_t changed = 0;
  for (auto& s : samples) {
    if (!s.pdi) {
      s.pdi = value;
      s.pdi_imputed = true;
      ++changed;
    }
  }
  return changed;
}

double median_pdi(const Dataset& samples) {
  std::vector<double> v;
  for (const auto& s : samples) {
    if (s.pdi && !s.pdi_imputed) v.push_back(*s.pdi);
  }
  if (v.empty()) throw EmptyInput("no recorded PDI values");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Dataset augment_chemistry(const Dataset& series, std::optional<double> mcr,
                          const AugmentOptions& options) {
  if (series.empty()) throw TooFewPoints("empty series");
  if (!mcr || !(*mcr > 0.0)) {
    throw MissingMcr("no critical molecular weight for '" + series.front().monomer() + "'");
  }
  std::vector<const PolymerSample*> high;
  for (const auto& s : series) {
    if (s.shear == 0.0 && s.mw >= *mcr) high.push_back(&s);
  }
  if (high.size() < options.min_points) {
    throw TooFewPoints(std::to_string(high.size()) + " zero-shear points above Mcr, need " +
                       std::to_string(options.min_points));
  }
  // Least-squares line log eta = c + alpha2 log Mw on the entangled branch.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto* s : high) {
    const double x = std::log10(s->mw);
    sx += x;
    sy += s->log10_eta;
    sxx += x * x;
    sxy += x * s->log10_eta;
  }
  const double n = static_cast<double>(high.size());
  const double det = n * sxx - sx * sx;
  if (!(std::abs(det) > 0.0)) throw TooFewPoints("entangled points share one Mw");
  const double alpha2 = (n * sxy - sx * sy) / det;
  const double intercept = (sy - alpha2 * sx) / n;
  const double log_mcr = std::log10(*mcr);
  const double at_mcr = intercept + alpha2 * log_mcr;

  std::vector<double> pdis;
  for (const auto* s : high) {
    if (s->pdi) pdis.push_back(*s->pdi);
  }
  std::optional<double> pdi;
  if (!pdis.empty()) {
    std::sort(pdis.begin(), pdis.end());
    pdi = pdis[pdis.size() / 2];
  }

  const double lo = std::log10(options.min_mw);
  const double hi = std::log10(options.mcr_fraction * *mcr);
  if (!(hi > lo)) throw TooFewPoints("Mcr too small for the augmentation grid");
  const std::size_t m = options.points_per_chemistry;
  const PolymerSample& base = *high.front();
  Dataset out;
  for (std::size_t i = 0; i < m; ++i) {
    const double x = m == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m - 1);
    PolymerSample s = base;
    s.record_id = base.record_id + "-aug-" + std::to_string(i);
    s.mw = std::pow(10.0, x);
    s.pdi = pdi;
    s.pdi_imputed = false;
    s.shear = 0.0;
    s.log10_eta = at_mcr + options.alpha1 * (x - log_mcr);
    s.augmented = true;
    out.push_back(std::move(s));
  }
  return out;
}

AugmentResult augment_low_mw(const Dataset& samples,
                             const std::map<std::string, double>& mcr_by_monomer,
                             const AugmentOptions& options) {
  // Series keyed by (monomer, temperature), zero shear only, in first-seen order.
  std::vector<std::pair<std::string, double>> keys;
  std::map<std::pair<std::string, double>, Dataset> series;
  for (const auto& s : samples) {
    if (s.shear != 0.0 || s.augmented) continue;
    auto key = std::make_pair(s.monomer(), s.temp);
    auto [it, inserted] = series.try_emplace(key);
    if (inserted) keys.push_back(key);
    it->second.push_back(s);
  }
  AugmentResult result;
  for (const auto& key : keys) {
    const std::string label = fmt::format("{}@{}", key.first, key.second);
    auto mcr = mcr_by_monomer.find(key.first);
    if (mcr == mcr_by_monomer.end()) {
      result.skipped.push_back(label + ": no Mcr");
      continue;
    }
    try {
      auto added = augment_chemistry(series.at(key), mcr->second, options);
      result.added.insert(result.added.end(), added.begin(), added.end());
    } catch (const ValidationError& e) {
      result.skipped.push_back(label + ": " + e.what());
    }
  }
  return result;
}

std::vector<std::string> monomers(const Dataset& samples) {
  std::vector<std::string> out;
  for (const auto& s : samples) {
    const auto& m = s.monomer();
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  return out;
}

}  // namespace rheo::data
