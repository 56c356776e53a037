#include "compforge/design_space.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "compforge/errors.hpp"
#include "compforge/manifest.hpp"

namespace compforge {

namespace {

constexpr std::string_view kStageNames[kStageCount] = {
    "SeriesPreprocessing", "SeriesEncoding", "NetworkArchitecture", "NetworkOptimization"};

using nlohmann::json;

const json& require_field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw SchemaError(where + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  const auto& v = require_field(obj, key, where);
  if (!v.is_string()) throw SchemaError(where + ": field '" + key + "' must be a string");
  auto s = v.get<std::string>();
  if (s.empty()) throw SchemaError(where + ": field '" + key + "' must be non-empty");
  return s;
}

std::vector<std::string> require_string_list(const json& obj, const char* key, const std::string& where) {
  const auto& v = require_field(obj, key, where);
  if (!v.is_array()) throw SchemaError(where + ": field '" + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string() || item.get<std::string>().empty()) {
      throw SchemaError(where + ": '" + key + "' entries must be non-empty strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

ComponentRef parse_ref(const json& obj, const std::string& where) {
  return {require_string(obj, "dim", where), require_string(obj, "comp", where)};
}

ValidityRule parse_rule(const json& doc, const std::string& where) {
  if (!doc.is_object()) throw SchemaError(where + ": rule must be an object");
  ValidityRule rule;
  const auto kind = require_string(doc, "kind", where);
  if (doc.contains("note")) {
    if (!doc["note"].is_string()) throw SchemaError(where + ": 'note' must be a string");
    rule.note = doc["note"].get<std::string>();
  }
  if (kind == "forbid") {
    rule.kind = ValidityRule::Kind::Forbid;
    const auto& lits = require_field(doc, "literals", where);
    if (!lits.is_array()) throw SchemaError(where + ": 'literals' must be an array");
    for (const auto& lit : lits) rule.literals.push_back(parse_ref(lit, where));
  } else if (kind == "require") {
    rule.kind = ValidityRule::Kind::Require;
    rule.antecedent = parse_ref(require_field(doc, "if", where), where);
    rule.consequent_dimension = require_string(doc, "then_dim", where);
    rule.allowed = require_string_list(doc, "allowed", where);
  } else {
    throw SchemaError(where + ": unknown rule kind '" + kind + "'");
  }
  return rule;
}

json rule_to_json(const ValidityRule& rule) {
  json j;
  if (rule.kind == ValidityRule::Kind::Forbid) {
    j["kind"] = "forbid";
    j["literals"] = json::array();
    for (const auto& lit : rule.literals) {
      j["literals"].push_back({{"dim", lit.dimension_id}, {"comp", lit.component_id}});
    }
  } else {
    j["kind"] = "require";
    j["if"] = {{"dim", rule.antecedent.dimension_id}, {"comp", rule.antecedent.component_id}};
    j["then_dim"] = rule.consequent_dimension;
    j["allowed"] = rule.allowed;
  }
  if (!rule.note.empty()) j["note"] = rule.note;
  return j;
}

}  // namespace

std::string_view to_string(Stage stage) { return kStageNames[static_cast<std::size_t>(stage)]; }

Stage parse_stage(std::string_view name) {
  for (std::size_t i = 0; i < kStageCount; ++i) {
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  }
  throw SchemaError("unknown stage '" + std::string(name) + "'");
}

DesignSpace::DesignSpace(std::string name, std::vector<Dimension> dimensions, std::vector<ValidityRule> rules,
                         std::vector<ValidityRule> optional_rules)
    : name_(std::move(name)),
      dimensions_(std::move(dimensions)),
      rules_(std::move(rules)),
      optional_rules_(std::move(optional_rules)) {
  compile();
}

void DesignSpace::compile() {
  offsets_.clear();
  dim_lookup_.clear();
  comp_lookup_.assign(dimensions_.size(), {});
  total_components_ = 0;

  for (std::size_t d = 0; d < dimensions_.size(); ++d) {
    const auto& dim = dimensions_[d];
    if (dim.id.empty()) throw SchemaError("dimension " + std::to_string(d) + " has an empty id");
    if (!dim_lookup_.emplace(dim.id, d).second) throw SchemaError("duplicate dimension id '" + dim.id + "'");
    if (dim.components.empty()) throw SchemaError("dimension '" + dim.id + "' has no components");
    for (std::size_t c = 0; c < dim.components.size(); ++c) {
      if (dim.components[c].empty()) throw SchemaError("dimension '" + dim.id + "' has an empty component id");
      if (!comp_lookup_[d].emplace(dim.components[c], c).second) {
        throw SchemaError("duplicate component '" + dim.components[c] + "' in dimension '" + dim.id + "'");
      }
    }
    if (dim.baseline_index >= dim.components.size()) {
      throw SchemaError("baseline index out of range in dimension '" + dim.id + "'");
    }
    offsets_.push_back(total_components_);
    total_components_ += dim.components.size();
  }

  auto resolve = [&](const ComponentRef& ref) -> std::pair<std::size_t, std::size_t> {
    const auto d = dimension_index(ref.dimension_id);
    if (!d) throw ReferenceError("rule references unknown dimension '" + ref.dimension_id + "'");
    const auto c = component_index(*d, ref.component_id);
    if (!c) {
      throw ReferenceError("rule references unknown component '" + ref.component_id + "' in dimension '" +
                           ref.dimension_id + "'");
    }
    return {*d, *c};
  };

  auto compile_list = [&](const std::vector<ValidityRule>& list, bool keep) {
    for (const auto& rule : list) {
      if (rule.kind == ValidityRule::Kind::Forbid) {
        if (rule.literals.size() < 2) throw SchemaError("forbid rule needs at least two literals");
        CompiledForbid f;
        std::set<std::size_t> seen;
        for (const auto& lit : rule.literals) {
          auto [d, c] = resolve(lit);
          if (!seen.insert(d).second) throw SchemaError("forbid rule literals must name distinct dimensions");
          f.literals.emplace_back(d, c);
        }
        if (keep) forbids_.push_back(std::move(f));
      } else {
        auto [d, c] = resolve(rule.antecedent);
        const auto then_dim = dimension_index(rule.consequent_dimension);
        if (!then_dim) {
          throw ReferenceError("rule references unknown dimension '" + rule.consequent_dimension + "'");
        }
        if (*then_dim == d) throw SchemaError("require rule antecedent and consequent share a dimension");
        if (rule.allowed.empty()) throw SchemaError("require rule has an empty allowed set");
        CompiledRequire r{d, c, *then_dim, std::vector<bool>(dimensions_[*then_dim].components.size(), false)};
        for (const auto& comp : rule.allowed) {
          const auto ci = component_index(*then_dim, comp);
          if (!ci) {
            throw ReferenceError("rule references unknown component '" + comp + "' in dimension '" +
                                 rule.consequent_dimension + "'");
          }
          r.allowed[*ci] = true;
        }
        if (keep) requires_.push_back(std::move(r));
      }
    }
  };
  forbids_.clear();
  requires_.clear();
  compile_list(rules_, true);
  compile_list(optional_rules_, false);
}

std::optional<std::size_t> DesignSpace::dimension_index(std::string_view id) const {
  const auto it = dim_lookup_.find(std::string(id));
  if (it == dim_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> DesignSpace::component_index(std::size_t dim, std::string_view component) const {
  if (dim >= comp_lookup_.size()) return std::nullopt;
  const auto it = comp_lookup_[dim].find(std::string(component));
  if (it == comp_lookup_[dim].end()) return std::nullopt;
  return it->second;
}

void DesignSpace::check_shape(const Configuration& config) const {
  if (config.size() != dimensions_.size()) {
    throw ShapeError("configuration has " + std::to_string(config.size()) + " entries, space has " +
                     std::to_string(dimensions_.size()) + " dimensions");
  }
  for (std::size_t d = 0; d < config.size(); ++d) {
    if (config[d] >= dimensions_[d].components.size()) {
      throw ShapeError("component index out of range in dimension '" + dimensions_[d].id + "'");
    }
  }
}

bool DesignSpace::is_valid(const Configuration& config) const {
  check_shape(config);
  for (const auto& f : forbids_) {
    const bool all = std::all_of(f.literals.begin(), f.literals.end(),
                                 [&](const auto& lit) { return config[lit.first] == lit.second; });
    if (all) return false;
  }
  for (const auto& r : requires_) {
    if (config[r.if_dim] == r.if_comp && !r.allowed[config[r.then_dim]]) return false;
  }
  return true;
}

bool DesignSpace::is_consistent_partial(const std::vector<int>& partial) const {
  for (const auto& f : forbids_) {
    const bool all = std::all_of(f.literals.begin(), f.literals.end(), [&](const auto& lit) {
      return partial[lit.first] == static_cast<int>(lit.second);
    });
    if (all) return false;
  }
  for (const auto& r : requires_) {
    const int then_value = partial[r.then_dim];
    if (partial[r.if_dim] == static_cast<int>(r.if_comp) && then_value >= 0 &&
        !r.allowed[static_cast<std::size_t>(then_value)]) {
      return false;
    }
  }
  return true;
}

bool DesignSpace::pair_refuted(const InteractionPair& p) const {
  for (const auto& f : forbids_) {
    if (f.literals.size() != 2) continue;
    const auto& [d0, c0] = f.literals[0];
    const auto& [d1, c1] = f.literals[1];
    if ((d0 == p.dim_a && c0 == p.comp_a && d1 == p.dim_b && c1 == p.comp_b) ||
        (d1 == p.dim_a && c1 == p.comp_a && d0 == p.dim_b && c0 == p.comp_b)) {
      return true;
    }
  }
  for (const auto& r : requires_) {
    if (r.if_dim == p.dim_a && r.if_comp == p.comp_a && r.then_dim == p.dim_b && !r.allowed[p.comp_b]) return true;
    if (r.if_dim == p.dim_b && r.if_comp == p.comp_b && r.then_dim == p.dim_a && !r.allowed[p.comp_a]) return true;
  }
  return false;
}

DesignSpace DesignSpace::with_optional_rules() const {
  auto rules = rules_;
  rules.insert(rules.end(), optional_rules_.begin(), optional_rules_.end());
  return DesignSpace(name_, dimensions_, std::move(rules));
}

DesignSpace DesignSpace::without_rules() const { return DesignSpace(name_, dimensions_, {}, optional_rules_); }

nlohmann::json DesignSpace::to_json() const {
  json doc;
  doc["name"] = name_;
  doc["dimensions"] = json::array();
  for (const auto& dim : dimensions_) {
    doc["dimensions"].push_back({{"id", dim.id},
                                 {"stage", std::string(to_string(dim.stage))},
                                 {"components", dim.components},
                                 {"baseline", dim.components[dim.baseline_index]}});
  }
  doc["rules"] = json::array();
  for (const auto& r : rules_) doc["rules"].push_back(rule_to_json(r));
  if (!optional_rules_.empty()) {
    doc["optional_rules"] = json::array();
    for (const auto& r : optional_rules_) doc["optional_rules"].push_back(rule_to_json(r));
  }
  return doc;
}

std::string DesignSpace::fingerprint() const { return sha256_hex(to_json().dump()); }

std::string DesignSpace::describe(const Configuration& config) const {
  std::ostringstream out;
  for (std::size_t d = 0; d < config.size() && d < dimensions_.size(); ++d) {
    if (d) out << ' ';
    out << dimensions_[d].id << '=' << dimensions_[d].components.at(config[d]);
  }
  return out.str();
}

DesignSpace parse_space(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SchemaError("space document must be a JSON object");
  const auto name = require_string(doc, "name", "space");
  const auto& dims_json = require_field(doc, "dimensions", "space");
  if (!dims_json.is_array() || dims_json.empty()) throw SchemaError("space: 'dimensions' must be a non-empty array");

  std::vector<Dimension> dims;
  for (std::size_t i = 0; i < dims_json.size(); ++i) {
    const auto where = "dimension " + std::to_string(i);
    const auto& dj = dims_json[i];
    Dimension dim;
    dim.id = require_string(dj, "id", where);
    dim.stage = parse_stage(require_string(dj, "stage", where));
    dim.components = require_string_list(dj, "components", where);
    if (dj.contains("baseline")) {
      if (!dj["baseline"].is_string()) throw SchemaError(where + ": 'baseline' must be a string");
      const auto baseline = dj["baseline"].get<std::string>();
      const auto it = std::find(dim.components.begin(), dim.components.end(), baseline);
      if (it == dim.components.end()) {
        throw SchemaError(where + ": baseline '" + baseline + "' is not a listed component");
      }
      dim.baseline_index = static_cast<std::size_t>(it - dim.components.begin());
    }
    dims.push_back(std::move(dim));
  }

  auto parse_rules = [&](const char* key) {
    std::vector<ValidityRule> rules;
    if (!doc.contains(key)) return rules;
    const auto& arr = doc.at(key);
    if (!arr.is_array()) throw SchemaError(std::string("space: '") + key + "' must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      rules.push_back(parse_rule(arr[i], std::string(key) + "[" + std::to_string(i) + "]"));
    }
    return rules;
  };
  auto rules = parse_rules("rules");
  auto optional = parse_rules("optional_rules");
  return DesignSpace(name, std::move(dims), std::move(rules), std::move(optional));
}

DesignSpace parse_space_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("space document is not valid JSON: ") + e.what());
  }
  return parse_space(doc);
}

DesignSpace load_space(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open space file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_space_text(ss.str());
}

std::vector<Configuration> enumerate_valid(const DesignSpace& space, std::size_t cap) {
  std::vector<Configuration> out;
  const std::size_t k = space.size();
  if (cap == 0 || k == 0) return out;

  // Depth-first in lexicographic order, pruning partial assignments that
  // already violate a rule.
  std::vector<int> partial(k, -1);
  std::size_t depth = 0;
  while (true) {
    const int limit = static_cast<int>(space.dimension(depth).components.size());
    ++partial[depth];
    if (partial[depth] >= limit) {
      partial[depth] = -1;
      if (depth == 0) break;
      --depth;
      continue;
    }
    if (!space.is_consistent_partial(partial)) continue;
    if (depth + 1 == k) {
      std::vector<std::uint32_t> a(partial.begin(), partial.end());
      out.emplace_back(std::move(a));
      if (out.size() >= cap) break;
    } else {
      ++depth;
    }
  }
  return out;
}

std::vector<InteractionPair> all_pairs(const DesignSpace& space) {
  std::vector<InteractionPair> pairs;
  const std::size_t k = space.size();
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      for (std::size_t ca = 0; ca < space.dimension(a).components.size(); ++ca) {
        for (std::size_t cb = 0; cb < space.dimension(b).components.size(); ++cb) {
          InteractionPair p{a, ca, b, cb};
          if (!space.pair_refuted(p)) pairs.push_back(p);
        }
      }
    }
  }
  return pairs;
}

}  // namespace compforge
