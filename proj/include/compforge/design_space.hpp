#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace compforge {

enum class Stage { SeriesPreprocessing, SeriesEncoding, NetworkArchitecture, NetworkOptimization };

inline constexpr std::size_t kStageCount = 4;

std::string_view to_string(Stage stage);
/// Throws SchemaError for an unknown name.
Stage parse_stage(std::string_view name);

struct ComponentRef {
  std::string dimension_id;
  std::string component_id;

  friend bool operator==(const ComponentRef&, const ComponentRef&) = default;
};

struct Dimension {
  std::string id;
  Stage stage = Stage::SeriesPreprocessing;
  std::vector<std::string> components;
  std::size_t baseline_index = 0;
};

struct ValidityRule {
  enum class Kind { Forbid, Require };

  Kind kind = Kind::Forbid;
  // Forbid: the configuration is invalid when it contains every literal.
  std::vector<ComponentRef> literals;
  // Require: when `antecedent` is present, `consequent_dimension` must take a
  // component from `allowed`.
  ComponentRef antecedent;
  std::string consequent_dimension;
  std::vector<std::string> allowed;
  // Free-text assumption carried through from the space document.
  std::string note;
};

/// One component index per dimension, in dimension order. Ordering is
/// lexicographic over the assignment vector.
struct Configuration {
  std::vector<std::uint32_t> assignment;

  Configuration() = default;
  explicit Configuration(std::vector<std::uint32_t> a) : assignment(std::move(a)) {}

  std::size_t size() const { return assignment.size(); }
  std::uint32_t operator[](std::size_t i) const { return assignment[i]; }

  friend bool operator==(const Configuration&, const Configuration&) = default;
  friend auto operator<=>(const Configuration&, const Configuration&) = default;
};

/// A cross-dimension component pair with dim_a < dim_b.
struct InteractionPair {
  std::size_t dim_a = 0;
  std::size_t comp_a = 0;
  std::size_t dim_b = 0;
  std::size_t comp_b = 0;

  friend bool operator==(const InteractionPair&, const InteractionPair&) = default;
  friend auto operator<=>(const InteractionPair&, const InteractionPair&) = default;
};

class DesignSpace {
 public:
  DesignSpace() = default;

  /// Validates every invariant and compiles rules to index form.
  /// Throws SchemaError for structural problems and ReferenceError for rules
  /// naming unknown dimensions or components. `optional_rules` are validated
  /// but not enforced.
  DesignSpace(std::string name, std::vector<Dimension> dimensions, std::vector<ValidityRule> rules,
              std::vector<ValidityRule> optional_rules = {});

  const std::string& name() const { return name_; }
  const std::vector<Dimension>& dimensions() const { return dimensions_; }
  const Dimension& dimension(std::size_t i) const { return dimensions_.at(i); }
  const std::vector<ValidityRule>& rules() const { return rules_; }
  const std::vector<ValidityRule>& optional_rules() const { return optional_rules_; }

  std::size_t size() const { return dimensions_.size(); }
  std::size_t total_components() const { return total_components_; }

  std::optional<std::size_t> dimension_index(std::string_view id) const;
  std::optional<std::size_t> component_index(std::size_t dim, std::string_view component) const;

  /// Offset of dimension `dim` in the frozen global component enumeration
  /// (dimension order, then component order).
  std::size_t offset(std::size_t dim) const { return offsets_.at(dim); }
  std::size_t global_index(std::size_t dim, std::size_t comp) const { return offsets_[dim] + comp; }

  /// Throws ShapeError when the assignment length differs from size() or an
  /// index is out of range.
  void check_shape(const Configuration& config) const;

  bool is_valid(const Configuration& config) const;

  /// Rule check over a partial assignment (`-1` marks an unassigned
  /// dimension). True when no rule is already violated by assigned values.
  bool is_consistent_partial(const std::vector<int>& partial) const;

  /// Two-dimension pre-filter: true when the rules restricted to the pair's
  /// two dimensions already refute it.
  bool pair_refuted(const InteractionPair& pair) const;

  /// Copy with `optional_rules` promoted to enforced rules.
  DesignSpace with_optional_rules() const;
  /// Copy with no enforced rules.
  DesignSpace without_rules() const;

  nlohmann::json to_json() const;
  /// Hex SHA-256 of the canonical JSON form.
  std::string fingerprint() const;

  std::string describe(const Configuration& config) const;

 private:
  struct CompiledForbid {
    std::vector<std::pair<std::size_t, std::size_t>> literals;  // (dim, comp)
  };
  struct CompiledRequire {
    std::size_t if_dim = 0;
    std::size_t if_comp = 0;
    std::size_t then_dim = 0;
    std::vector<bool> allowed;
  };

  void compile();

  std::string name_;
  std::vector<Dimension> dimensions_;
  std::vector<ValidityRule> rules_;
  std::vector<ValidityRule> optional_rules_;

  std::size_t total_components_ = 0;
  std::vector<std::size_t> offsets_;
  std::unordered_map<std::string, std::size_t> dim_lookup_;
  std::vector<std::unordered_map<std::string, std::size_t>> comp_lookup_;
  std::vector<CompiledForbid> forbids_;
  std::vector<CompiledRequire> requires_;
};

DesignSpace parse_space(const nlohmann::json& doc);
/// Throws SchemaError on unparsable text.
DesignSpace parse_space_text(std::string_view text);
DesignSpace load_space(const std::filesystem::path& path);

/// Valid configurations in lexicographic order, at most `cap` of them.
std::vector<Configuration> enumerate_valid(const DesignSpace& space, std::size_t cap);

/// Every cross-dimension pair not refuted by the two-dimension pre-filter,
/// ordered by dimension then component.
std::vector<InteractionPair> all_pairs(const DesignSpace& space);

}  // namespace compforge
