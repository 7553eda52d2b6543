// Copyright 2026 The cbpert Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment driver: seeded instance generators, bound-versus-actual trials,
// CSV and JSON reporting, the segment-integral lemma suite and the
// resolvent-bootstrap check.
//
// Every random draw descends from one master seed. Trial t samples its noise
// from substream_seed(seed, t); the random eigenbasis uses the reserved
// substream kBasisStream. JSON objects are emitted with sorted keys, and
// non-finite numbers are written as the strings "inf", "-inf" or "nan".

#ifndef CBPERT_HARNESS_HPP_
#define CBPERT_HARNESS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbpert/cbpert.hpp"

namespace cbpert {

using json = nlohmann::json;

inline constexpr std::uint64_t kBasisStream = ~std::uint64_t{0};

// Allowance for quantities produced by adaptive quadrature, whose relative
// tolerance is 1e-4.
inline constexpr double kQuadratureSlack = 1e-4;

// ---------------------------------------------------------------------------
// Serialization helpers

inline json number_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double json_number(const json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw InvalidArgument("expected a number, got \"" + s + "\"");
  }
  if (!j.is_number()) throw InvalidArgument("expected a number");
  return j.get<double>();
}

// %.17g, with inf and nan spelled out.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json to_json(const BoundReport& r) {
  json j;
  j["name"] = std::string(to_string(r.name));
  j["value"] = number_json(r.value);
  j["applicable"] = r.applicable;
  j["precondition_failures"] = r.precondition_failures;
  j["vacuous"] = r.vacuous;
  json inputs = json::object();
  for (const auto& [k, v] : r.inputs) inputs[k] = number_json(v);
  j["inputs"] = std::move(inputs);
  if (r.frobenius_factor) j["frobenius_factor"] = *r.frobenius_factor;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline json to_json(const PerturbationStats& s) {
  json j;
  j["n"] = s.n;
  j["p"] = s.p;
  j["noise_norm"] = number_json(s.noise_norm);
  j["lambda1"] = number_json(s.lambda1);
  j["lambda_n"] = number_json(s.lambda_n);
  j["sigma1"] = number_json(s.sigma1);
  j["lambda_p"] = number_json(s.lambda_p);
  j["delta_p"] = number_json(s.delta_p);
  j["sigma_next"] = number_json(s.sigma_next);
  j["r"] = s.r;
  j["r_found"] = s.gap_condition_met;
  j["x"] = number_json(s.x);
  j["k"] = s.k;
  j["split_valid"] = s.split_valid;
  if (s.split_valid) {
    j["lambda_k"] = number_json(s.lambda_k);
    j["delta_k"] = number_json(s.delta_k);
    j["r1"] = s.r1;
    j["r_bar"] = s.r_bar;
    j["x_bar"] = number_json(s.x_bar);
    if (s.negative_block()) {
      j["lambda_neg"] = number_json(s.lambda_neg);
      j["delta_neg"] = number_json(s.delta_neg);
      j["r2"] = s.r2;
    }
  }
  return j;
}

inline json to_json(const NoiseSpec& s) {
  return {{"kind", std::string(to_string(s.kind))}, {"scale", s.scale}};
}

inline NoiseSpec noise_from_json(const json& j) {
  NoiseSpec s;
  if (j.contains("kind")) {
    const auto kind = parse_noise_kind(j.at("kind").get<std::string>());
    if (!kind) throw InvalidArgument("unknown noise kind " + j.at("kind").dump());
    s.kind = *kind;
  }
  if (j.contains("scale")) s.scale = json_number(j.at("scale"));
  if (!(s.scale >= 0) || !std::isfinite(s.scale)) throw InvalidArgument("noise scale must be >= 0");
  return s;
}

// ---------------------------------------------------------------------------
// Experiment configuration

struct SpectrumSpec {
  enum class Kind { kExplicit, kLowRank, kGeometric };
  Kind kind = Kind::kExplicit;
  std::vector<double> values;  // explicit: all n; low_rank: the nonzero part
  double lambda1 = 1.0;        // geometric
  double ratio = 0.5;          // geometric
  int rank = 0;                // geometric: 0 means n

  // Descending eigenvalues of length n.
  std::vector<double> eigenvalues(int n) const {
    std::vector<double> out;
    switch (kind) {
      case Kind::kExplicit:
        if (static_cast<int>(values.size()) != n) {
          throw InvalidArgument("explicit spectrum needs exactly n values");
        }
        if (!std::is_sorted(values.begin(), values.end(), std::greater<>())) {
          throw InvalidArgument("explicit spectrum must be sorted descending");
        }
        out = values;
        break;
      case Kind::kLowRank:
        if (values.empty() || static_cast<int>(values.size()) > n) {
          throw InvalidArgument("low_rank spectrum needs 1..n values");
        }
        out = values;
        out.resize(n, 0.0);
        break;
      case Kind::kGeometric: {
        const int m = rank == 0 ? n : rank;
        if (m < 1 || m > n) throw InvalidArgument("geometric rank out of range");
        if (!(ratio > 0 && ratio < 1)) throw InvalidArgument("geometric ratio must be in (0, 1)");
        out.assign(n, 0.0);
        for (int i = 0; i < m; ++i) out[i] = lambda1 * std::pow(ratio, i);
        break;
      }
    }
    for (double v : out) {
      if (!std::isfinite(v)) throw InvalidArgument("spectrum values must be finite");
    }
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
  }

  json to_json() const {
    switch (kind) {
      case Kind::kExplicit: return {{"kind", "explicit"}, {"values", values}};
      case Kind::kLowRank: return {{"kind", "low_rank"}, {"values", values}};
      case Kind::kGeometric:
        return {{"kind", "geometric"}, {"lambda1", lambda1}, {"ratio", ratio}, {"rank", rank}};
    }
    return nullptr;
  }

  static SpectrumSpec FromJson(const json& j) {
    SpectrumSpec s;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "explicit" || kind == "low_rank") {
      s.kind = kind == "explicit" ? Kind::kExplicit : Kind::kLowRank;
      for (const auto& v : j.at("values")) s.values.push_back(json_number(v));
    } else if (kind == "geometric") {
      s.kind = Kind::kGeometric;
      s.lambda1 = json_number(j.at("lambda1"));
      s.ratio = json_number(j.at("ratio"));
      s.rank = j.value("rank", 0);
    } else {
      throw InvalidArgument("unknown spectrum kind \"" + kind + "\"");
    }
    return s;
  }
};

struct ExperimentConfig {
  int n = 0;
  int p = 1;
  SpectrumSpec spectrum;
  bool random_basis = true;
  // The seed inside is ignored; trials draw from the experiment seed.
  NoiseSpec noise;
  int trials = 1;
  std::vector<BoundName> bounds{kAllBounds.begin(), kAllBounds.end()};
  // 0-based subset for davis_kahan_S; empty means {1..p}.
  IndexSet subset;
  // general_f uses f(z) = z^f_power.
  int f_power = 1;

  void Validate() const {
    if (n < 2) throw InvalidArgument("n must be >= 2");
    if (p < 1 || p >= n) throw InvalidArgument("need 1 <= p < n");
    if (trials < 1) throw InvalidArgument("trials must be >= 1");
    if (f_power < 0) throw InvalidArgument("f_power must be >= 0");
    if (bounds.empty()) throw InvalidArgument("no bounds requested");
    if (!subset.empty()) normalize_index_set(subset, n);
    spectrum.eigenvalues(n);
  }

  IndexSet EffectiveSubset() const { return subset.empty() ? leading_set(p) : subset; }

  bool Wants(BoundName b) const { return std::find(bounds.begin(), bounds.end(), b) != bounds.end(); }

  json to_json() const {
    json j;
    j["n"] = n;
    j["p"] = p;
    j["spectrum"] = spectrum.to_json();
    j["basis"] = random_basis ? "random" : "identity";
    j["noise"] = cbpert::to_json(noise);
    j["trials"] = trials;
    std::vector<std::string> names;
    for (BoundName b : bounds) names.emplace_back(to_string(b));
    j["bounds"] = names;
    std::vector<int> one_based;
    for (int i : EffectiveSubset()) one_based.push_back(i + 1);
    j["subset"] = one_based;
    j["f_power"] = f_power;
    return j;
  }

  // `subset` is 1-based in JSON.
  static ExperimentConfig FromJson(const json& j) {
    ExperimentConfig c;
    c.n = j.at("n").get<int>();
    c.p = j.at("p").get<int>();
    c.spectrum = SpectrumSpec::FromJson(j.at("spectrum"));
    const std::string basis = j.value("basis", std::string("random"));
    if (basis != "random" && basis != "identity") {
      throw InvalidArgument("basis must be \"random\" or \"identity\"");
    }
    c.random_basis = basis == "random";
    if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
    c.trials = j.value("trials", 1);
    if (j.contains("bounds")) {
      c.bounds.clear();
      for (const auto& b : j.at("bounds")) {
        const auto name = parse_bound_name(b.get<std::string>());
        if (!name) throw InvalidArgument("unknown bound " + b.dump());
        c.bounds.push_back(*name);
      }
    }
    if (j.contains("subset")) {
      for (const auto& i : j.at("subset")) c.subset.push_back(i.get<int>() - 1);
    }
    c.f_power = j.value("f_power", 1);
    c.Validate();
    return c;
  }
};

// ---------------------------------------------------------------------------
// Trials

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  PerturbationStats stats;
  double actual_proj = 0.0;    // ||P_p(A~) - P_p(A)||
  double actual_rankp = 0.0;   // ||A~_p - A_p||
  double actual_subset = 0.0;  // ||P_S(A~) - P_S(A)|| for the configured S
  double actual_f = 0.0;       // ||f_S(A~) - f_S(A)||, S = {1..p}
  std::vector<BoundReport> bounds;  // parallel to ExperimentConfig::bounds

  // The actual perturbation a bound of this name controls.
  double ActualFor(BoundName b) const {
    switch (b) {
      case BoundName::kDavisKahanS: return actual_subset;
      case BoundName::kDavisKahanP:
      case BoundName::kEigMain: return actual_proj;
      case BoundName::kGeneralF: return actual_f;
      default: return actual_rankp;
    }
  }
};

// Raised when an applicable bound falls below the quantity it controls.
class ValidityViolation : public std::runtime_error {
 public:
  ValidityViolation(const std::string& what, json diagnostic)
      : std::runtime_error(what), diagnostic_(std::move(diagnostic)) {}
  const json& diagnostic() const { return diagnostic_; }

 private:
  json diagnostic_;
};

// A bound is violated when it is below the actual value by more than
// rounding in the low-rank norm evaluation.
inline bool violates(double bound, double actual) {
  return actual > bound + 1e-12 * std::max(1.0, std::abs(bound));
}

namespace internal {

inline BoundReport RequireSplit(BoundReport r, const PerturbationStats& s, BoundName wanted) {
  if (r.name != wanted) {
    r.name = wanted;
    r.applicable = false;
    r.precondition_failures.emplace_back("k_below_p");
  }
  (void)s;
  return r;
}

inline BoundReport EvaluateBound(BoundName b, const PerturbationStats& s, const GapProfile& gaps,
                                 const IndexSet& subset, int f_power) {
  switch (b) {
    case BoundName::kDavisKahanS: return bound_davis_kahan(s, gaps, subset);
    case BoundName::kDavisKahanP: return bound_davis_kahan_p(s);
    case BoundName::kEckartYoung: return bound_eckart_young(s);
    case BoundName::kEigMain: return bound_eig_main(s);
    case BoundName::kGeneralF: return bound_general_f(s, Monomial{f_power});
    case BoundName::kLowrankE: return bound_lowrank_E(s);
    case BoundName::kLowrankXbar: return bound_lowrank_xbar(s);
    case BoundName::kPsdLowrankE: return RequireSplit(bound_lowrank_E(s), s, b);
    case BoundName::kPsdLowrankXbar: return RequireSplit(bound_lowrank_xbar(s), s, b);
  }
  throw InvalidArgument("unknown bound");
}

inline json TrialDiagnostic(const TrialRecord& rec) {
  json j;
  j["trial"] = rec.trial;
  j["seed"] = rec.seed;
  j["stats"] = to_json(rec.stats);
  j["actual_proj"] = number_json(rec.actual_proj);
  j["actual_rankp"] = number_json(rec.actual_rankp);
  j["actual_subset"] = number_json(rec.actual_subset);
  j["actual_f"] = number_json(rec.actual_f);
  json b = json::array();
  for (const auto& r : rec.bounds) b.push_back(to_json(r));
  j["bounds"] = std::move(b);
  return j;
}

}  // namespace internal

inline SymmetricMatrix build_matrix(const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::vector<double> eigs = cfg.spectrum.eigenvalues(cfg.n);
  if (!cfg.random_basis) return SymmetricMatrix::Diagonal(eigs);
  Rng rng(substream_seed(seed, kBasisStream));
  return with_spectrum(eigs, random_orthogonal(cfg.n, rng));
}

// One trial against a fixed decomposition of A.
inline TrialRecord run_trial(const ExperimentConfig& cfg, const SymmetricMatrix& a,
                             const SpectralDecomposition& da, const GapProfile& gaps,
                             std::uint64_t seed, int trial) {
  NoiseSpec spec = cfg.noise;
  spec.seed = seed;
  spec = spec.for_trial(static_cast<std::uint64_t>(trial));
  const SymmetricMatrix e = sample_noise(spec, cfg.n);
  const SpectralDecomposition dp = eigendecompose(a + e);

  TrialRecord rec;
  rec.trial = trial;
  rec.seed = spec.seed;
  rec.stats = compute_stats_rotated(da, rotate_to_eigenbasis(da, e), spectral_norm(e), cfg.p);
  rec.actual_proj = actual_perturbation(da, dp, cfg.p, Functional::kProjP);
  rec.actual_rankp = actual_perturbation(da, dp, cfg.p, Functional::kRankP);
  const IndexSet subset = cfg.EffectiveSubset();
  if (cfg.Wants(BoundName::kDavisKahanS)) {
    rec.actual_subset = internal::FunctionalDifference(da, dp, subset, subset,
                                                       [](double) { return 1.0; });
  }
  if (cfg.Wants(BoundName::kGeneralF)) {
    rec.actual_f = actual_f_perturbation(da, dp, cfg.p, Monomial{cfg.f_power});
  }
  for (BoundName b : cfg.bounds) {
    rec.bounds.push_back(internal::EvaluateBound(b, rec.stats, gaps, subset, cfg.f_power));
  }
  for (const BoundReport& r : rec.bounds) {
    const double actual = rec.ActualFor(r.name);
    if (r.applicable && violates(r.value, actual)) {
      std::ostringstream os;
      os << "bound " << to_string(r.name) << " = " << format_double(r.value)
         << " is below the actual perturbation " << format_double(actual) << " in trial "
         << trial << " (noise seed " << rec.seed << ")";
      throw ValidityViolation(os.str(), internal::TrialDiagnostic(rec));
    }
  }
  return rec;
}

struct ExperimentResult {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  std::vector<TrialRecord> records;
  json summary;
};

inline json summarize(const ExperimentConfig& cfg, std::uint64_t seed,
                      const std::vector<TrialRecord>& records) {
  json config = cfg.to_json();
  config["seed"] = seed;
  json validity = json::object(), applicability = json::object(), sharpness = json::object();
  json checked = json::object();
  for (std::size_t b = 0; b < cfg.bounds.size(); ++b) {
    const std::string name(to_string(cfg.bounds[b]));
    int applicable = 0, violations = 0;
    std::vector<double> ratios;
    for (const auto& rec : records) {
      const BoundReport& r = rec.bounds[b];
      if (!r.applicable) continue;
      ++applicable;
      const double actual = rec.ActualFor(cfg.bounds[b]);
      violations += violates(r.value, actual);
      if (actual > 0) ratios.push_back(r.value / actual);
    }
    // Vacuously 1 when no trial passes the gates.
    validity[name] = applicable == 0 ? 1.0
                                     : static_cast<double>(applicable - violations) / applicable;
    checked[name] = applicable;
    applicability[name] = static_cast<double>(applicable) / static_cast<double>(records.size());
    sharpness[name] = ratios.empty() ? json(nullptr) : number_json(median(ratios));
  }

  // Head-to-head comparisons: fraction of trials in which the contender is
  // applicable and strictly below the baseline.
  json regime = json::object();
  const auto index_of = [&](BoundName b) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < cfg.bounds.size(); ++i) {
      if (cfg.bounds[i] == b) return i;
    }
    return std::nullopt;
  };
  const std::pair<BoundName, BoundName> pairs[] = {
      {BoundName::kEigMain, BoundName::kDavisKahanP},
      {BoundName::kLowrankE, BoundName::kEckartYoung},
      {BoundName::kLowrankXbar, BoundName::kEckartYoung},
      {BoundName::kPsdLowrankE, BoundName::kEckartYoung},
      {BoundName::kPsdLowrankXbar, BoundName::kEckartYoung},
  };
  for (const auto& [contender, baseline] : pairs) {
    const auto ci = index_of(contender), bi = index_of(baseline);
    if (!ci || !bi) continue;
    int wins = 0;
    for (const auto& rec : records) {
      const BoundReport& c = rec.bounds[*ci];
      wins += c.applicable && c.value < rec.bounds[*bi].value;
    }
    regime[std::string(to_string(contender)) + "_below_" + std::string(to_string(baseline))] =
        static_cast<double>(wins) / static_cast<double>(records.size());
  }
  std::vector<double> norms, gap_ratio;
  for (const auto& rec : records) {
    norms.push_back(rec.stats.noise_norm);
    if (rec.stats.noise_norm > 0) gap_ratio.push_back(rec.stats.delta_p / rec.stats.noise_norm);
  }
  regime["median_noise_norm"] = number_json(median(norms));
  regime["median_delta_p_over_noise"] =
      gap_ratio.empty() ? json(nullptr) : number_json(median(gap_ratio));

  json out;
  out["config"] = std::move(config);
  out["validity"] = std::move(validity);
  out["applicability"] = std::move(applicability);
  out["applicable_trials"] = std::move(checked);
  out["sharpness_median"] = std::move(sharpness);
  out["regime"] = std::move(regime);
  out["lemmas"] = nullptr;
  return out;
}

// Throws ValidityViolation on the first violated applicable bound.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.Validate();
  ExperimentResult out;
  out.config = cfg;
  out.seed = seed;
  const SymmetricMatrix a = build_matrix(cfg, seed);
  const SpectralDecomposition da = eigendecompose(a);
  const GapProfile gaps(da);
  for (int t = 0; t < cfg.trials; ++t) out.records.push_back(run_trial(cfg, a, da, gaps, seed, t));
  out.summary = summarize(cfg, seed, out.records);
  return out;
}

// ---------------------------------------------------------------------------
// CSV

inline std::vector<std::string> csv_header(const ExperimentConfig& cfg) {
  std::vector<std::string> h = {"trial", "seed",   "n", "p",     "noise_norm",  "delta_p",
                                "lambda_p", "r",   "x", "k",     "x_bar",       "actual_proj",
                                "actual_rankp"};
  if (cfg.Wants(BoundName::kDavisKahanS)) h.emplace_back("actual_subset");
  if (cfg.Wants(BoundName::kGeneralF)) h.emplace_back("actual_f");
  for (BoundName b : cfg.bounds) h.emplace_back(to_string(b));
  for (BoundName b : cfg.bounds) h.emplace_back(std::string(to_string(b)) + "_applicable");
  return h;
}

inline void write_csv(std::ostream& os, const ExperimentConfig& cfg,
                      const std::vector<TrialRecord>& records) {
  const auto header = csv_header(cfg);
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& rec : records) {
    const auto& s = rec.stats;
    os << rec.trial << ',' << rec.seed << ',' << s.n << ',' << s.p << ','
       << format_double(s.noise_norm) << ',' << format_double(s.delta_p) << ','
       << format_double(s.lambda_p) << ',' << s.r << ',' << format_double(s.x) << ',' << s.k
       << ',' << format_double(s.x_bar) << ',' << format_double(rec.actual_proj) << ','
       << format_double(rec.actual_rankp);
    if (cfg.Wants(BoundName::kDavisKahanS)) os << ',' << format_double(rec.actual_subset);
    if (cfg.Wants(BoundName::kGeneralF)) os << ',' << format_double(rec.actual_f);
    for (const auto& r : rec.bounds) os << ',' << format_double(r.value);
    for (const auto& r : rec.bounds) os << ',' << (r.applicable ? 1 : 0);
    os << '\n';
  }
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t Column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InvalidArgument("no column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
};

// Plain comma-separated cells; the writer above never quotes.
inline CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  const auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  if (!std::getline(is, line)) throw InvalidArgument("empty CSV");
  t.header = split(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) throw InvalidArgument("ragged CSV row");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Seeded instances

struct Instance {
  SymmetricMatrix a;
  SymmetricMatrix e;
  int p = 1;
  std::vector<double> spectrum;
  double noise_norm = 0.0;
  std::vector<std::string> log;  // regeneration notes
};

namespace internal {

inline double Uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

// Haar basis and a Gaussian Wigner direction rescaled to the target norm.
inline Instance Assemble(std::vector<double> eigs, int p, double target_norm, Rng& rng) {
  const int n = static_cast<int>(eigs.size());
  std::sort(eigs.begin(), eigs.end(), std::greater<>());
  Instance inst;
  inst.p = p;
  inst.spectrum = eigs;
  inst.a = with_spectrum(eigs, random_orthogonal(n, rng));
  const SymmetricMatrix raw = sample_noise({NoiseKind::kGaussianWigner, 1.0, rng.next()}, n);
  inst.e = raw.scaled(target_norm / spectral_norm(raw));
  inst.noise_norm = spectral_norm(inst.e);
  return inst;
}

// Halves the noise until no gate in `reasons` fails, logging each step.
template <class Gates>
void ShrinkNoiseUntil(Instance& inst, std::uint64_t seed, Gates&& failing) {
  for (int attempt = 0; attempt < 60; ++attempt) {
    const std::vector<std::string> reasons = failing(inst);
    if (reasons.empty()) return;
    const bool noise_only = std::all_of(reasons.begin(), reasons.end(), [](const std::string& r) {
      return r == gate::kGapLower || r == gate::kGapLowerK || r == gate::kGapLowerNeg;
    });
    if (!noise_only) {
      throw std::logic_error("generated spectrum violates a structural gate: " + reasons.front());
    }
    std::ostringstream os;
    os << "seed " << seed << ": " << reasons.front() << " failed at ||E|| = "
       << format_double(inst.noise_norm) << "; noise scaled by 0.5";
    inst.log.push_back(os.str());
    inst.e = inst.e.scaled(0.5);
    inst.noise_norm = spectral_norm(inst.e);
  }
  throw std::logic_error("could not satisfy the noise gates");
}

}  // namespace internal

// Spectrum and noise satisfying 4 ||E|| <= delta_p <= |lambda_p| / 4 with r
// found: lambda_p = 10, delta_p in [1, 2.5], up to two eigenvalues in
// (5, lambda_p), the rest in [-4, 4]. Needs n >= 5.
inline Instance make_eig_instance(std::uint64_t seed, int n) {
  if (n < 5) throw InvalidArgument("make_eig_instance needs n >= 5");
  Rng rng(seed);
  const int p = 1 + static_cast<int>(rng.uniform() * std::min(3, n - 4));
  std::vector<double> eigs;
  double top = 10.0;
  eigs.push_back(top);
  for (int i = 1; i < p; ++i) eigs.push_back(top += internal::Uniform(rng, 0.5, 3.0));
  const double delta_p = internal::Uniform(rng, 1.0, 2.5);
  const double next = 10.0 - delta_p;
  eigs.push_back(next);
  eigs.push_back(internal::Uniform(rng, 5.0, 5.0 + 0.9 * (next - 5.0)));
  while (static_cast<int>(eigs.size()) < n) eigs.push_back(internal::Uniform(rng, -4.0, 4.0));
  Instance inst = internal::Assemble(eigs, p, delta_p / 4.0 * internal::Uniform(rng, 0.2, 1.0), rng);
  internal::ShrinkNoiseUntil(inst, seed, [](const Instance& in) {
    return bound_eig_main(compute_stats(eigendecompose(in.a), in.e, in.p)).precondition_failures;
  });
  return inst;
}

// Spectrum and noise satisfying the sign-split gates: positive block of size
// k in {1, 2} with lambda_k = 10, negative block of size p - k in {0, 1, 2}
// (always 0 when psd) with lambda_m in [-10.5, -10], both adjacent gaps in
// [1, 2.5], remaining eigenvalues in [-4, 4] ([0, 4] when psd). Needs n >= 7.
inline Instance make_split_instance(std::uint64_t seed, int n, bool psd) {
  if (n < 7) throw InvalidArgument("make_split_instance needs n >= 7");
  Rng rng(seed);
  const int k = 1 + static_cast<int>(rng.uniform() * 2);
  const int neg = psd ? 0 : static_cast<int>(rng.uniform() * 3);
  std::vector<double> eigs;
  double top = 10.0;
  eigs.push_back(top);
  for (int i = 1; i < k; ++i) eigs.push_back(top += internal::Uniform(rng, 0.5, 3.0));
  const double delta_k = internal::Uniform(rng, 1.0, 2.5);
  eigs.push_back(10.0 - delta_k);
  double min_gap = delta_k;
  if (neg > 0) {
    double bottom = -internal::Uniform(rng, 10.0, 10.5);
    const double delta_neg = internal::Uniform(rng, 1.0, 2.5);
    min_gap = std::min(min_gap, delta_neg);
    eigs.push_back(bottom + delta_neg);
    eigs.push_back(bottom);
    for (int i = 1; i < neg; ++i) eigs.push_back(bottom -= internal::Uniform(rng, 0.5, 3.0));
  }
  const double lo = psd ? 0.0 : -4.0;
  while (static_cast<int>(eigs.size()) < n) eigs.push_back(internal::Uniform(rng, lo, 4.0));
  Instance inst =
      internal::Assemble(eigs, k + neg, min_gap / 4.0 * internal::Uniform(rng, 0.2, 1.0), rng);
  internal::ShrinkNoiseUntil(inst, seed, [](const Instance& in) {
    return bound_lowrank_xbar(compute_stats(eigendecompose(in.a), in.e, in.p))
        .precondition_failures;
  });
  return inst;
}

// Generic spectrum (Gaussian, scale 5) and noise with delta_p = 4 gap_ratio
// ||E||; gap_ratio = 1 puts the contour at exactly 2 ||E|| from lambda_p
// and lambda_{p+1}, up to a relative 1e-12 kept on the safe side.
inline Instance make_gap_instance(std::uint64_t seed, int n, double gap_ratio) {
  if (n < 3) throw InvalidArgument("make_gap_instance needs n >= 3");
  if (!(gap_ratio >= 1)) throw InvalidArgument("gap_ratio must be >= 1");
  Rng rng(seed);
  std::vector<double> eigs(n);
  for (double& v : eigs) v = 5.0 * rng.normal();
  std::sort(eigs.begin(), eigs.end(), std::greater<>());
  const int p = 1 + static_cast<int>(rng.uniform() * std::max(1, n / 3));
  const double delta_p = eigs[p - 1] - eigs[p];
  return internal::Assemble(eigs, p, delta_p / (4.0 * gap_ratio) * (1.0 - 1e-12), rng);
}

// ---------------------------------------------------------------------------
// Resolvent bootstrap

struct KeyInequalityReport {
  int n = 0;
  int p = 0;
  int f_power = 0;
  double noise_norm = 0.0;
  double delta_p = 0.0;
  double actual = 0.0;         // ||f_S(A~) - f_S(A)||
  double f_integral = 0.0;     // F
  double two_f1 = 0.0;         // 2 F_1
  double max_resolvent = 0.0;  // max over the contour of ||(z - A)^{-1} E||
  bool chain_holds = false;
  bool resolvent_holds = false;

  bool pass() const { return chain_holds && resolvent_holds; }

  json to_json() const {
    return {{"n", n},
            {"p", p},
            {"f_power", f_power},
            {"noise_norm", number_json(noise_norm)},
            {"delta_p", number_json(delta_p)},
            {"actual", number_json(actual)},
            {"F", number_json(f_integral)},
            {"two_F1", number_json(two_f1)},
            {"max_resolvent_noise", number_json(max_resolvent)},
            {"chain_holds", chain_holds},
            {"resolvent_holds", resolvent_holds},
            {"pass", pass()}};
  }
};

// On the contour around lambda_1..lambda_p: ||f_S(A~) - f_S(A)|| <= F <= 2 F_1
// and max ||(z - A)^{-1} E|| <= 1/2. Refuses instances with delta_p < 4 ||E||.
// F and F_1 carry the quadrature allowance; the resolvent bound carries 1e-9.
inline KeyInequalityReport key_inequality_check(const SymmetricMatrix& a, const SymmetricMatrix& e,
                                                int p, int f_power) {
  if (a.n() != e.n()) throw InvalidArgument("dimension mismatch");
  const SpectralDecomposition da = eigendecompose(a);
  const SpectralDecomposition dp = eigendecompose(a + e);
  KeyInequalityReport r;
  r.n = a.n();
  r.p = p;
  r.f_power = f_power;
  r.noise_norm = spectral_norm(e);
  const RectContour c = build_contour_main1(da, p);
  r.delta_p = da.lambda(p) - da.lambda(p + 1);
  if (r.delta_p < 4.0 * r.noise_norm) {
    std::ostringstream os;
    os << "gap assumption violated: delta_p = " << format_double(r.delta_p) << " < 4 ||E|| = "
       << format_double(4.0 * r.noise_norm);
    throw InvalidArgument(os.str());
  }
  const Monomial f{f_power};
  r.actual = actual_f_perturbation(da, dp, p, f);
  const BootstrapIntegrals b = bootstrap_integrals(da, dp, e, c, f);
  r.f_integral = b.f_integral;
  r.two_f1 = 2.0 * b.f1_integral;
  r.max_resolvent = b.max_resolvent_noise;
  r.chain_holds = r.actual <= r.f_integral * (1.0 + kQuadratureSlack) + 1e-12 &&
                  r.f_integral <= r.two_f1 * (1.0 + kQuadratureSlack) + 1e-12;
  r.resolvent_holds = r.max_resolvent <= 0.5 + 1e-9;
  return r;
}

// ---------------------------------------------------------------------------
// Segment-integral lemmas

struct LemmaTally {
  int instances = 0;
  int failures = 0;
  // min over instances of (rhs - lhs) / rhs.
  double margin = std::numeric_limits<double>::infinity();

  void Add(double lhs, double rhs) {
    ++instances;
    if (lhs > rhs * (1.0 + kQuadratureSlack)) ++failures;
    margin = std::min(margin, (rhs - lhs) / rhs);
  }
  bool pass() const { return instances > 0 && failures == 0; }
  json to_json() const {
    return {{"instances", instances},
            {"failures", failures},
            {"margin", number_json(margin)},
            {"pass", pass()}};
  }
};

struct LemmaSuite {
  std::map<std::string, LemmaTally> lemmas;
  std::vector<std::string> log;
  std::uint64_t seed = 0;
  std::vector<int> n_grid;

  bool pass() const {
    return !lemmas.empty() && std::all_of(lemmas.begin(), lemmas.end(),
                                          [](const auto& kv) { return kv.second.pass(); });
  }

  json to_json() const {
    json l = json::object();
    for (const auto& [name, t] : lemmas) l[name] = t.to_json();
    return {{"config", {{"seed", seed}, {"n_grid", n_grid}}},
            {"lemmas", std::move(l)},
            {"regenerated", log},
            {"pass", pass()}};
  }
};

// Lemmas checked, each on `instances` seeded instances cycling through
// n_grid (entries must be >= 7):
//   M1_main   M_1 <= 70 (||E|| / |lambda_p| log(6 sigma_1 / delta_p) + r^2 x / delta_p)
//   M2_M4     max(M_2, M_4) <= ||E|| |x_1 - x_0| / T^2
//   M3        M_3 <= 4 ||E|| / |x_1 - lambda_1|
// on the single-block contour with f = 1;
//   N1        N_1 <= 8 a_0 / delta_k + 4 log(3T / delta_k)
//   N2_N4     max(N_2, N_4) <= sqrt(2) (a_1 - a_0) / T
//   N3        N_3 <= 4 a_1 / (a_1 - lambda_1) + 4 log(3T / (a_1 - lambda_1))
//   M1_fz     M_1 <= r^2 x_bar (8 lambda_k / delta_k + 2 log(3T / delta_k))
//                    + 80 ||E|| log(3T / delta_k),  r = r_bar, f(z) = z
// on the positive contour of a sign split; and
//   integral  \int_{-T}^{T} dt / (t^2 + a^2) <= 4 / a
// on the grid a in {0.1, 1, 10}, T / a in {1, 10, 100}.
inline LemmaSuite verify_lemmas(std::uint64_t seed, const std::vector<int>& n_grid,
                                int instances = 10) {
  if (n_grid.empty()) throw InvalidArgument("n_grid must not be empty");
  for (int n : n_grid) {
    if (n < 7) throw InvalidArgument("n_grid entries must be >= 7");
  }
  if (instances < 1) throw InvalidArgument("instances must be >= 1");
  LemmaSuite suite;
  suite.seed = seed;
  suite.n_grid = n_grid;
  auto& m1 = suite.lemmas["M1_main"];
  auto& m24 = suite.lemmas["M2_M4"];
  auto& m3 = suite.lemmas["M3"];
  auto& n1 = suite.lemmas["N1"];
  auto& n24 = suite.lemmas["N2_N4"];
  auto& n3 = suite.lemmas["N3"];
  auto& m1z = suite.lemmas["M1_fz"];
  auto& integral = suite.lemmas["integral"];

  const auto take_log = [&](const Instance& inst) {
    suite.log.insert(suite.log.end(), inst.log.begin(), inst.log.end());
  };

  for (int i = 0; i < instances; ++i) {
    const int n = n_grid[static_cast<std::size_t>(i) % n_grid.size()];

    const std::uint64_t eig_seed = substream_seed(seed, 2 * static_cast<std::uint64_t>(i));
    const Instance eig = make_eig_instance(eig_seed, n);
    take_log(eig);
    const SpectralDecomposition d = eigendecompose(eig.a);
    const PerturbationStats s = compute_stats(d, eig.e, eig.p);
    const RectContour c = build_contour_main1(d, eig.p);
    const SegmentIntegrals m = segment_integrals_M(d, eig.e, c, Monomial{0});
    const double x0 = c.x_left(), x1 = c.x_right(), t = c.half_height();
    m1.Add(m.values[0], 70.0 * (s.noise_norm / std::abs(s.lambda_p) *
                                    std::log(6.0 * s.sigma1 / s.delta_p) +
                                static_cast<double>(s.r) * s.r * s.x / s.delta_p));
    m24.Add(std::max(m.values[1], m.values[3]), s.noise_norm * std::abs(x1 - x0) / (t * t));
    m3.Add(m.values[2], 4.0 * s.noise_norm / std::abs(x1 - s.lambda1));

    const std::uint64_t split_seed = substream_seed(seed, 2 * static_cast<std::uint64_t>(i) + 1);
    const Instance sp = make_split_instance(split_seed, n, false);
    take_log(sp);
    const SpectralDecomposition ds = eigendecompose(sp.a);
    const PerturbationStats ss = compute_stats(ds, sp.e, sp.p);
    const RectContour g = build_contours_lowrank(ds, sp.p, ss.k).positive;
    const double a0 = g.x_left(), a1 = g.x_right(), tg = g.half_height();
    const double dk = ss.delta_k;
    const SegmentIntegrals nn = segment_integrals_N(ds, g);
    n1.Add(nn.values[0], 8.0 * a0 / dk + 4.0 * std::log(std::abs(3.0 * tg / dk)));
    n24.Add(std::max(nn.values[1], nn.values[3]), std::sqrt(2.0) * (a1 - a0) / tg);
    const double right = a1 - ss.lambda1;
    n3.Add(nn.values[2], 4.0 * a1 / right + 4.0 * std::log(std::abs(3.0 * tg / right)));
    const SegmentIntegrals mz = segment_integrals_M(ds, sp.e, g, Monomial{1});
    const double rb = ss.r_bar;
    m1z.Add(mz.values[0], rb * rb * ss.x_bar * (8.0 * ss.lambda_k / dk + 2.0 * std::log(3.0 * tg / dk)) +
                              80.0 * ss.noise_norm * std::log(3.0 * tg / dk));
  }

  for (double a : {0.1, 1.0, 10.0}) {
    for (double ratio : {1.0, 10.0, 100.0}) {
      const IntegralLemmaCheck chk = integral_lemma_check(a, a * ratio);
      integral.Add(chk.numeric, chk.bound);
    }
  }
  return suite;
}

}  // namespace cbpert

#endif  // CBPERT_HARNESS_HPP_
