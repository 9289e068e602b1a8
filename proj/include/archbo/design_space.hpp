#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "archbo/random.hpp"

namespace archbo {

/// Index of a categorical level in declaration order.
struct Level {
    std::size_t index = 0;
    auto operator<=>(const Level&) const = default;
};

/// Typed value of one design variable: real, integer or categorical level.
using Value = std::variant<double, std::int64_t, Level>;

struct Continuous {
    double lower = 0.0;
    double upper = 1.0;
};

struct Integer {
    std::int64_t lower = 0;
    std::int64_t upper = 1;
};

struct Categorical {
    std::vector<std::string> levels;
};

struct VariableSpec {
    std::string name;
    std::variant<Continuous, Integer, Categorical> kind;

    bool is_continuous() const { return std::holds_alternative<Continuous>(kind); }
    bool is_integer() const { return std::holds_alternative<Integer>(kind); }
    bool is_categorical() const { return std::holds_alternative<Categorical>(kind); }
    bool is_discrete() const { return !is_continuous(); }

    /// Number of relaxed coordinates: 1, or one per level for categoricals.
    std::size_t encoded_size() const;

    /// Canonical value held while the variable is inactive.
    Value imputation() const;

    /// True when `v` has the alternative matching this variable's kind.
    bool accepts(const Value& v) const;

    /// Readable rendering of a value (level names for categoricals).
    std::string format(const Value& v) const;
};

/// `child` is active iff `parent` is active and holds one of `activating_values`.
struct ActivationRule {
    std::size_t child = 0;
    std::size_t parent = 0;
    std::vector<Value> activating_values;
};

/// Restricts `target` to `allowed` whenever `controller` equals `controller_value`.
/// Controller values missing from the table leave the target unrestricted.
struct ValueRule {
    struct Entry {
        Value controller_value;
        std::vector<Value> allowed;
    };
    std::size_t target = 0;
    std::size_t controller = 0;
    std::vector<Entry> table;

    /// Allowed set for a controller value, or nullptr if unrestricted.
    const std::vector<Value>* allowed_for(const Value& controller_value) const;
};

/// Unvalidated description of a hierarchical mixed space.
struct SpaceDefinition {
    std::vector<VariableSpec> variables;
    std::vector<ActivationRule> activation_rules;
    std::vector<ValueRule> value_rules;
    std::vector<std::size_t> signature_vars;
};

struct Diagnostic {
    enum class Kind {
        DegenerateBounds,
        TooFewLevels,
        DuplicateLevel,
        DuplicateName,
        IndexOutOfRange,
        Cycle,
        MultipleActivationRules,
        ContinuousController,
        TypeMismatch,
        EmptyAllowedSet,
        OutOfDomain,
    };
    Kind kind;
    std::string message;
};

std::string to_string(Diagnostic::Kind kind);

/// One diagnostic per violated invariant; empty when the definition is valid.
std::vector<Diagnostic> validate(const SpaceDefinition& definition);

/// A corrected, activity-annotated point. Inactive entries hold imputation values.
struct DesignPoint {
    std::vector<Value> values;
    std::vector<bool> active;

    bool operator==(const DesignPoint&) const = default;
};

/// A validated hierarchical mixed design space.
class DesignSpace {
public:
    /// Throws InvalidSpace listing every diagnostic when `definition` is invalid.
    explicit DesignSpace(SpaceDefinition definition);

    const SpaceDefinition& definition() const { return def_; }
    const std::vector<VariableSpec>& variables() const { return def_.variables; }
    const VariableSpec& variable(std::size_t i) const { return def_.variables.at(i); }
    std::size_t size() const { return def_.variables.size(); }

    /// Index of the variable called `name`; throws SchemaMismatch if absent.
    std::size_t index_of(const std::string& name) const;

    /// Length of the relaxed encoding.
    std::size_t encoded_dim() const { return encoded_dim_; }

    /// First relaxed coordinate of variable `i`.
    std::size_t offset(std::size_t i) const { return offsets_.at(i); }

    /// Variable index owning each relaxed coordinate.
    const std::vector<std::size_t>& coordinate_owner() const { return owner_; }

    /// Point with every variable at its imputation value (then corrected).
    std::vector<Value> imputed_values() const;

private:
    SpaceDefinition def_;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> owner_;
    std::size_t encoded_dim_ = 0;
};

/// Activity fixpoint: a variable is active iff it has no activation rule, or its
/// parent is active and holds an activating value.
std::vector<bool> compute_activity(const DesignSpace& space, const std::vector<Value>& raw_values);

/// Clip to bounds, impute inactive variables and repair value-rule violations.
/// Idempotent. Throws SchemaMismatch for wrongly typed or non-finite input.
DesignPoint correct(const DesignSpace& space, const std::vector<Value>& raw_values);

/// Relaxed encoding: min-max normalized reals and integers, one-hot categoricals.
Eigen::VectorXd encode(const DesignSpace& space, const DesignPoint& point);

/// Inverse of encode followed by correct(). Throws DimensionMismatch on length.
DesignPoint decode(const DesignSpace& space, const Eigen::VectorXd& encoded);

/// Uniform on [0,1)^dim stratified so each column has one sample in each of the
/// n equal-width bins.
Eigen::MatrixXd latin_hypercube(std::size_t n, std::size_t dim, Rng& rng);

/// Latin-hypercube design in the relaxed cube, decoded and corrected.
std::vector<DesignPoint> sample_doe(const DesignSpace& space, std::size_t n, Rng& rng);

/// Independent uniform draw of every variable over its declared domain, corrected.
DesignPoint sample_uniform(const DesignSpace& space, Rng& rng);

struct DiscreteEnumeration {
    /// Size of the raw Cartesian product of discrete domains.
    std::uint64_t cartesian = 0;
    /// Corrected, deduplicated assignments, continuous variables at imputation.
    std::vector<DesignPoint> assignments;
};

inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

/// Throws TooLarge when the Cartesian product exceeds `cap`.
DiscreteEnumeration enumerate_discrete(const DesignSpace& space,
                                       std::uint64_t cap = kDefaultEnumerationCap);

/// Number of distinct projections of the valid assignments onto the signature.
std::size_t count_architectures(const DesignSpace& space,
                                std::uint64_t cap = kDefaultEnumerationCap);

/// Same as count_architectures for an explicit signature.
std::size_t count_distinct_projections(const DiscreteEnumeration& enumeration,
                                       const std::vector<std::size_t>& signature);

/// Rounds half away from zero.
std::int64_t round_half_away(double x);

}  // namespace archbo
