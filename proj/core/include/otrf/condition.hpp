#pragma once

#include <string>
#include <variant>

#include "otrf/latent.hpp"

namespace otrf {

// Selects which velocity a field returns. In the toy setting a "prompt"
// picks a registered data distribution; `reference` carries the state the
// reference-conditioned velocity points back to.
class ConditionSpec {
 public:
  struct Null {};
  struct Dataset {
    std::string name;
  };
  struct Reference {
    LatentState state;
  };

  ConditionSpec() = default;

  static ConditionSpec null() { return ConditionSpec{}; }
  static ConditionSpec dataset(std::string name);
  static ConditionSpec reference(LatentState state);

  bool is_null() const { return std::holds_alternative<Null>(kind_); }
  bool is_dataset() const { return std::holds_alternative<Dataset>(kind_); }
  bool is_reference() const { return std::holds_alternative<Reference>(kind_); }

  // Precondition: is_dataset().
  const std::string& dataset_name() const { return std::get<Dataset>(kind_).name; }
  // Precondition: is_reference().
  const LatentState& reference_state() const { return std::get<Reference>(kind_).state; }

  // "null", the dataset name, or "reference".
  std::string label() const;

  friend bool operator==(const ConditionSpec& a, const ConditionSpec& b);

 private:
  std::variant<Null, Dataset, Reference> kind_;
};

}  // namespace otrf
