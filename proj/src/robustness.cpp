#include "sqlstruct/robustness.hpp"

#include <set>

#include "sqlstruct/error.hpp"

namespace sqlstruct {

std::string_view to_string(PerturbationKind kind) {
  return kind == PerturbationKind::Paraphrase ? "paraphrase" : "schema_presentation";
}

PerturbationKind parse_perturbation_kind(std::string_view text) {
  if (text == "paraphrase") return PerturbationKind::Paraphrase;
  if (text == "schema_presentation" || text == "schema") return PerturbationKind::SchemaPresentation;
  throw Error(ErrorCode::InvalidInput, "unknown perturbation kind: " + std::string(text));
}

MajorityStructure majority_structure(const StructureDistribution& d, std::size_t variant_index) {
  MajorityStructure m;
  m.variant_index = variant_index;
  if (d.valid_count == 0 || d.groups.empty()) return m;
  // groups are ordered by (count desc, key asc), so the front is the tie-broken argmax
  m.key = d.groups.front().key;
  m.count = d.groups.front().count;
  m.tie = d.groups.size() > 1 && d.groups[1].count == m.count;
  return m;
}

std::vector<MajorityStructure> family_majorities(const VariantFamily& family, Dialect dialect) {
  std::vector<MajorityStructure> out;
  out.reserve(family.variants.size() + 1);
  out.push_back(majority_structure(build_distribution(key_candidates(family.base, dialect)), 0));
  for (std::size_t t = 0; t < family.variants.size(); ++t) {
    out.push_back(majority_structure(build_distribution(key_candidates(family.variants[t], dialect)), t + 1));
  }
  return out;
}

namespace {

void require_defined(std::span<const MajorityStructure> majorities) {
  if (majorities.size() < 2) throw Error(ErrorCode::InvalidInput, "a variant family needs T >= 1 variants");
  for (const auto& m : majorities) {
    if (!m.key) {
      throw Error(ErrorCode::UndefinedMajority, "input " + std::to_string(m.variant_index) + " has no parsed generation");
    }
  }
}

}  // namespace

double cross_variant_agreement(std::span<const MajorityStructure> majorities) {
  require_defined(majorities);
  const std::size_t n = majorities.size();  // T + 1
  std::size_t agree = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (*majorities[a].key == *majorities[b].key) ++agree;
    }
  }
  return 2.0 * static_cast<double>(agree) / static_cast<double>(n * (n - 1));
}

double perturbation_sensitivity(std::span<const MajorityStructure> majorities) {
  require_defined(majorities);
  std::size_t changed = 0;
  for (std::size_t t = 1; t < majorities.size(); ++t) {
    if (!(*majorities[t].key == *majorities[0].key)) ++changed;
  }
  return static_cast<double>(changed) / static_cast<double>(majorities.size() - 1);
}

double cross_variant_agreement(const VariantFamily& family, Dialect dialect) {
  return cross_variant_agreement(family_majorities(family, dialect));
}

double perturbation_sensitivity(const VariantFamily& family, Dialect dialect) {
  return perturbation_sensitivity(family_majorities(family, dialect));
}

double sensitive_fraction(std::span<const VariantFamily> families, Dialect dialect) {
  std::size_t defined = 0;
  std::size_t sensitive = 0;
  for (const auto& family : families) {
    const auto majorities = family_majorities(family, dialect);
    try {
      if (perturbation_sensitivity(majorities) > 0.0) ++sensitive;
      ++defined;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UndefinedMajority) throw;
    }
  }
  if (defined == 0) throw Error(ErrorCode::NoData, "no variant family with defined measures");
  return static_cast<double>(sensitive) / static_cast<double>(defined);
}

RobustnessRecord evaluate_family(const VariantFamily& family, Dialect dialect) {
  RobustnessRecord r;
  r.family_id = family.family_id;
  r.model = family.base.provenance.model;
  r.kind = family.kind;
  r.variants = family.variants.size();

  std::set<std::string> pooled;
  auto pool = [&](const GenerationSet& set) {
    for (const auto& result : key_candidates(set, dialect)) {
      if (const auto* key = std::get_if<StructureKey>(&result)) pooled.insert(key->key);
    }
  };
  pool(family.base);
  for (const auto& v : family.variants) pool(v);
  r.distinct = pooled.size();

  const auto majorities = family_majorities(family, dialect);
  try {
    r.cons_para = cross_variant_agreement(majorities);
    r.sensitivity = perturbation_sensitivity(majorities);
    r.sensitive = *r.sensitivity > 0.0;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UndefinedMajority) throw;
    r.excluded = true;
  }
  return r;
}

RobustnessSummary summarize_robustness(std::string model, PerturbationKind kind,
                                       std::span<const RobustnessRecord> records) {
  RobustnessSummary s;
  s.model = std::move(model);
  s.kind = kind;
  std::vector<std::optional<double>> sim, distinct, sens, frac;
  for (const auto& r : records) {
    ++s.families;
    if (r.excluded) {
      ++s.excluded;
      continue;
    }
    sim.push_back(r.cons_para);
    distinct.emplace_back(static_cast<double>(r.distinct));
    sens.push_back(r.sensitivity);
    frac.emplace_back(r.sensitive ? 1.0 : 0.0);
  }
  s.ast_sim = mean_defined(sim);
  s.distinct = mean_defined(distinct);
  s.sensitivity = mean_defined(sens);
  s.sensitive_frac = mean_defined(frac);
  return s;
}

}  // namespace sqlstruct
