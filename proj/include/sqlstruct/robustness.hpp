#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sqlstruct/metrics.hpp"

namespace sqlstruct {

enum class PerturbationKind { Paraphrase, SchemaPresentation };

std::string_view to_string(PerturbationKind kind);
/// "paraphrase" or "schema_presentation"; throws Error(InvalidInput) otherwise.
PerturbationKind parse_perturbation_kind(std::string_view text);

/// A base input x(0) and its T perturbed variants, all over the same database and gold query.
struct VariantFamily {
  std::string family_id;
  PerturbationKind kind = PerturbationKind::Paraphrase;
  GenerationSet base;
  std::vector<GenerationSet> variants;
};

struct MajorityStructure {
  std::size_t variant_index = 0;
  std::optional<StructureKey> key;  // empty when M = 0
  std::size_t count = 0;
  bool tie = false;
};

/// Most frequent key; ties go to the bytewise-smallest key and set `tie`.
MajorityStructure majority_structure(const StructureDistribution& d, std::size_t variant_index = 0);

/// Majorities for base (index 0) followed by each variant.
std::vector<MajorityStructure> family_majorities(const VariantFamily& family, Dialect dialect = Dialect::Sqlite);

/// Fraction of agreeing pairs among all T+1 majorities. Index 0 is the base.
/// Throws Error(UndefinedMajority) if any majority is undefined, Error(InvalidInput) for T < 1.
double cross_variant_agreement(std::span<const MajorityStructure> majorities);

/// Fraction of the T variants whose majority differs from the base's.
double perturbation_sensitivity(std::span<const MajorityStructure> majorities);

double cross_variant_agreement(const VariantFamily& family, Dialect dialect = Dialect::Sqlite);
double perturbation_sensitivity(const VariantFamily& family, Dialect dialect = Dialect::Sqlite);

/// Fraction of families with Sens > 0. Families with an undefined majority are
/// skipped; throws Error(NoData) when none remain.
double sensitive_fraction(std::span<const VariantFamily> families, Dialect dialect = Dialect::Sqlite);

struct RobustnessRecord {
  std::string family_id;
  std::string model;
  PerturbationKind kind = PerturbationKind::Paraphrase;
  std::size_t variants = 0;  // T
  std::optional<double> cons_para;
  std::optional<double> sensitivity;
  bool sensitive = false;
  bool excluded = false;
  std::size_t distinct = 0;  // distinct keys pooled over all T+1 inputs

  bool operator==(const RobustnessRecord&) const = default;
};

RobustnessRecord evaluate_family(const VariantFamily& family, Dialect dialect = Dialect::Sqlite);

struct RobustnessSummary {
  std::string model;
  PerturbationKind kind = PerturbationKind::Paraphrase;
  std::size_t families = 0;
  std::size_t excluded = 0;
  std::optional<double> ast_sim;
  std::optional<double> distinct;
  std::optional<double> sensitivity;
  std::optional<double> sensitive_frac;
};

RobustnessSummary summarize_robustness(std::string model, PerturbationKind kind,
                                       std::span<const RobustnessRecord> records);

}  // namespace sqlstruct
