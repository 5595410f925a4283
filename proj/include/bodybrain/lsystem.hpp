#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bodybrain/rng.hpp"

namespace bodybrain::lsystem {

inline constexpr std::size_t kDefaultMaxSymbols = 30;
inline constexpr int kDefaultIterations = 3;

using Symbol = std::string;

class InvalidGrammar : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Deterministic context-free L-system. Symbols with a rule are replaceable,
/// every other symbol of the alphabet is copied through unchanged.
struct Grammar {
    std::set<Symbol> alphabet;
    Symbol axiom;
    std::map<Symbol, std::vector<Symbol>> rules;

    void validate() const;
};

/// One parallel rewriting pass: every replaceable symbol is replaced by its
/// rule body simultaneously.
std::vector<Symbol> rewrite_pass(const Grammar& grammar, std::span<const Symbol> word);

/// Applies `iterations` parallel passes starting from the axiom. After each
/// pass the word is cut to `max_symbols` from the right.
std::vector<Symbol> rewrite(const Grammar& grammar, int iterations,
                            std::size_t max_symbols = kDefaultMaxSymbols);

// ---------------------------------------------------------------------------
// Robot alphabet

enum class RobotSymbol : std::uint8_t {
    Core,
    Brick,
    Hinge,
    MountFront,
    MountLeft,
    MountRight,
    Back,
};

inline constexpr std::array<RobotSymbol, 7> kRobotSymbols{
    RobotSymbol::Core,      RobotSymbol::Brick,      RobotSymbol::Hinge, RobotSymbol::MountFront,
    RobotSymbol::MountLeft, RobotSymbol::MountRight, RobotSymbol::Back,
};

// Everything a rule body may contain besides the leading core of the core rule.
inline constexpr std::array<RobotSymbol, 6> kBodySymbols{
    RobotSymbol::Brick,     RobotSymbol::Hinge,      RobotSymbol::MountFront,
    RobotSymbol::MountLeft, RobotSymbol::MountRight, RobotSymbol::Back,
};

constexpr bool is_module(RobotSymbol s) {
    return s == RobotSymbol::Core || s == RobotSymbol::Brick || s == RobotSymbol::Hinge;
}

std::string_view to_string(RobotSymbol s);
std::optional<RobotSymbol> parse_symbol(std::string_view token);

using WeightGene = std::array<double, 3>;

struct Gene {
    RobotSymbol symbol = RobotSymbol::Brick;
    WeightGene weights{};  // only meaningful for module symbols

    friend bool operator==(const Gene&, const Gene&) = default;
};

using RuleBody = std::vector<Gene>;

class InvalidGenotype : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Robot genotype: one rule per module symbol (C, B, A), axiom C. Weight
/// genes ride on the module symbols inside the rule bodies, so recombination
/// moves a rule together with the brain parameters it carries.
struct Genotype {
    std::array<RuleBody, 3> rules;  // indexed by rule_slot()

    static constexpr std::size_t rule_slot(RobotSymbol module) {
        return module == RobotSymbol::Core ? 0 : module == RobotSymbol::Brick ? 1 : 2;
    }
    static constexpr RobotSymbol slot_symbol(std::size_t slot) {
        return slot == 0 ? RobotSymbol::Core : slot == 1 ? RobotSymbol::Brick : RobotSymbol::Hinge;
    }

    const RuleBody& rule(RobotSymbol module) const { return rules[rule_slot(module)]; }
    RuleBody& rule(RobotSymbol module) { return rules[rule_slot(module)]; }

    /// Number of module-producing occurrences across all rule bodies.
    std::size_t gene_count() const;

    /// Weight genes in occurrence order (rule C, then B, then A; left to right).
    std::vector<WeightGene> weight_genes() const;

    /// Generic-grammar view of the body rules (weights dropped).
    Grammar grammar() const;

    void validate() const;

    friend bool operator==(const Genotype&, const Genotype&) = default;
};

/// A symbol of the developed word together with the weight-gene occurrence
/// that produced it (-1 for the axiom and for command symbols).
struct TracedSymbol {
    RobotSymbol symbol;
    int gene = -1;

    friend bool operator==(const TracedSymbol&, const TracedSymbol&) = default;
};

std::vector<TracedSymbol> develop(const Genotype& genotype, int iterations = kDefaultIterations,
                                  std::size_t max_symbols = kDefaultMaxSymbols);

std::vector<RobotSymbol> symbols_of(std::span<const TracedSymbol> word);

Genotype random_genotype(Rng& rng);
Genotype random_genotype(std::uint64_t seed);

/// Per rule, the whole body (with its weight genes) comes from `a` or `b`
/// with probability 1/2 each.
Genotype crossover(const Genotype& a, const Genotype& b, Rng& rng);

struct MutationParams {
    double rule_probability = 0.2;
    double weight_sigma = 0.1;
};

Genotype mutate(const Genotype& genotype, Rng& rng, const MutationParams& params = {});

class ParseError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string to_text(const Genotype& genotype);
Genotype from_text(std::string_view text);

} // namespace bodybrain::lsystem
