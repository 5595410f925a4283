#include "bodybrain/lsystem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace bodybrain::lsystem {

void Grammar::validate() const {
    if (!alphabet.contains(axiom))
        throw InvalidGrammar(fmt::format("axiom '{}' is not in the alphabet", axiom));
    for (const auto& [head, body] : rules) {
        if (!alphabet.contains(head))
            throw InvalidGrammar(fmt::format("rule head '{}' is not in the alphabet", head));
        for (const auto& s : body)
            if (!alphabet.contains(s))
                throw InvalidGrammar(fmt::format("rule '{}' uses unknown symbol '{}'", head, s));
    }
}

std::vector<Symbol> rewrite_pass(const Grammar& grammar, std::span<const Symbol> word) {
    std::vector<Symbol> next;
    next.reserve(word.size() * 2);
    for (const auto& s : word) {
        if (auto it = grammar.rules.find(s); it != grammar.rules.end())
            next.insert(next.end(), it->second.begin(), it->second.end());
        else
            next.push_back(s);
    }
    return next;
}

std::vector<Symbol> rewrite(const Grammar& grammar, int iterations, std::size_t max_symbols) {
    if (iterations < 0)
        throw std::invalid_argument("rewrite: iterations must be >= 0");
    grammar.validate();
    std::vector<Symbol> word{grammar.axiom};
    for (int i = 0; i < iterations; ++i) {
        word = rewrite_pass(grammar, word);
        if (word.size() > max_symbols) {
            spdlog::debug("rewrite: pass {} produced {} symbols, truncated to {}", i + 1, word.size(),
                          max_symbols);
            word.resize(max_symbols);
        }
    }
    return word;
}

// ---------------------------------------------------------------------------

std::string_view to_string(RobotSymbol s) {
    switch (s) {
    case RobotSymbol::Core: return "C";
    case RobotSymbol::Brick: return "B";
    case RobotSymbol::Hinge: return "A";
    case RobotSymbol::MountFront: return "mount-front";
    case RobotSymbol::MountLeft: return "mount-left";
    case RobotSymbol::MountRight: return "mount-right";
    case RobotSymbol::Back: return "move-back";
    }
    return "?";
}

std::optional<RobotSymbol> parse_symbol(std::string_view token) {
    for (auto s : kRobotSymbols)
        if (to_string(s) == token)
            return s;
    return std::nullopt;
}

std::size_t Genotype::gene_count() const {
    std::size_t n = 0;
    for (const auto& body : rules)
        n += static_cast<std::size_t>(
            std::count_if(body.begin(), body.end(), [](const Gene& g) { return is_module(g.symbol); }));
    return n;
}

std::vector<WeightGene> Genotype::weight_genes() const {
    std::vector<WeightGene> out;
    for (const auto& body : rules)
        for (const auto& g : body)
            if (is_module(g.symbol))
                out.push_back(g.weights);
    return out;
}

Grammar Genotype::grammar() const {
    Grammar g;
    for (auto s : kRobotSymbols)
        g.alphabet.emplace(to_string(s));
    g.axiom = std::string(to_string(RobotSymbol::Core));
    for (std::size_t slot = 0; slot < rules.size(); ++slot) {
        auto& body = g.rules[std::string(to_string(slot_symbol(slot)))];
        for (const auto& gene : rules[slot])
            body.emplace_back(to_string(gene.symbol));
    }
    return g;
}

void Genotype::validate() const {
    for (std::size_t slot = 0; slot < rules.size(); ++slot) {
        const auto& body = rules[slot];
        if (body.empty())
            throw InvalidGenotype(fmt::format("rule {} is empty", to_string(slot_symbol(slot))));
        for (std::size_t i = 0; i < body.size(); ++i) {
            const bool core = body[i].symbol == RobotSymbol::Core;
            if (core != (slot == 0 && i == 0))
                throw InvalidGenotype("core symbol may only lead the core rule");
            for (double w : body[i].weights)
                if (!std::isfinite(w) || w < -1.0 || w > 1.0)
                    throw InvalidGenotype(fmt::format("weight gene {} out of [-1, 1]", w));
        }
    }
}

std::vector<TracedSymbol> develop(const Genotype& genotype, int iterations, std::size_t max_symbols) {
    if (iterations < 0)
        throw std::invalid_argument("develop: iterations must be >= 0");

    // occurrence index of every gene, -1 for commands
    std::array<std::vector<int>, 3> occurrence;
    int next_occurrence = 0;
    for (std::size_t slot = 0; slot < genotype.rules.size(); ++slot)
        for (const auto& g : genotype.rules[slot])
            occurrence[slot].push_back(is_module(g.symbol) ? next_occurrence++ : -1);

    std::vector<TracedSymbol> word{{RobotSymbol::Core, -1}};
    for (int pass = 0; pass < iterations; ++pass) {
        std::vector<TracedSymbol> next;
        next.reserve(word.size() * 2);
        for (const auto& ts : word) {
            if (!is_module(ts.symbol)) {
                next.push_back(ts);
                continue;
            }
            const auto slot = Genotype::rule_slot(ts.symbol);
            const auto& body = genotype.rules[slot];
            for (std::size_t i = 0; i < body.size(); ++i)
                next.push_back({body[i].symbol, occurrence[slot][i]});
        }
        if (next.size() > max_symbols) {
            spdlog::debug("develop: pass {} produced {} symbols, truncated to {}", pass + 1, next.size(),
                          max_symbols);
            next.resize(max_symbols);
        }
        word = std::move(next);
    }
    return word;
}

std::vector<RobotSymbol> symbols_of(std::span<const TracedSymbol> word) {
    std::vector<RobotSymbol> out;
    out.reserve(word.size());
    for (const auto& ts : word)
        out.push_back(ts.symbol);
    return out;
}

namespace {

WeightGene random_weights(Rng& rng) {
    return {uniform_real(rng, -1.0, 1.0), uniform_real(rng, -1.0, 1.0), uniform_real(rng, -1.0, 1.0)};
}

Gene random_body_gene(Rng& rng) {
    Gene g;
    g.symbol = kBodySymbols[uniform_int<std::size_t>(rng, 0, kBodySymbols.size() - 1)];
    if (is_module(g.symbol))
        g.weights = random_weights(rng);
    return g;
}

} // namespace

Genotype random_genotype(Rng& rng) {
    Genotype g;
    for (std::size_t slot = 0; slot < g.rules.size(); ++slot) {
        const auto length = uniform_int<std::size_t>(rng, 1, 4);
        auto& body = g.rules[slot];
        if (slot == 0)
            body.push_back({RobotSymbol::Core, random_weights(rng)});
        while (body.size() < length)
            body.push_back(random_body_gene(rng));
    }
    return g;
}

Genotype random_genotype(std::uint64_t seed) {
    Rng rng{seed};
    return random_genotype(rng);
}

Genotype crossover(const Genotype& a, const Genotype& b, Rng& rng) {
    Genotype child;
    for (std::size_t slot = 0; slot < child.rules.size(); ++slot)
        child.rules[slot] = bernoulli(rng, 0.5) ? a.rules[slot] : b.rules[slot];
    return child;
}

Genotype mutate(const Genotype& genotype, Rng& rng, const MutationParams& params) {
    Genotype out = genotype;
    for (std::size_t slot = 0; slot < out.rules.size(); ++slot) {
        if (!bernoulli(rng, params.rule_probability))
            continue;
        auto& body = out.rules[slot];
        // the leading C of the core rule is fixed
        const std::size_t first = slot == 0 ? 1 : 0;
        switch (uniform_int(rng, 0, 2)) {
        case 0: {
            const auto pos = uniform_int<std::size_t>(rng, first, body.size());
            body.insert(body.begin() + static_cast<std::ptrdiff_t>(pos), random_body_gene(rng));
            break;
        }
        case 1:
            if (body.size() >= 2 && body.size() > first) {
                const auto pos = uniform_int<std::size_t>(rng, first, body.size() - 1);
                body.erase(body.begin() + static_cast<std::ptrdiff_t>(pos));
            }
            break;
        default:
            if (body.size() > first) {
                const auto pos = uniform_int<std::size_t>(rng, first, body.size() - 1);
                body[pos] = random_body_gene(rng);
            }
            break;
        }
    }
    if (params.weight_sigma > 0.0) {
        for (auto& body : out.rules)
            for (auto& gene : body) {
                if (!is_module(gene.symbol))
                    continue;
                for (double& w : gene.weights)
                    w = std::clamp(w + normal(rng, 0.0, params.weight_sigma), -1.0, 1.0);
            }
    }
    return out;
}

std::string to_text(const Genotype& genotype) {
    std::string out = fmt::format("axiom: {}\n", to_string(RobotSymbol::Core));
    for (std::size_t slot = 0; slot < genotype.rules.size(); ++slot) {
        out += fmt::format("rule {}:", to_string(Genotype::slot_symbol(slot)));
        for (const auto& g : genotype.rules[slot])
            out += fmt::format(" {}", to_string(g.symbol));
        out += '\n';
    }
    const auto genes = genotype.weight_genes();
    for (std::size_t i = 0; i < genes.size(); ++i)
        out += fmt::format("weights {}: {:.6f} {:.6f} {:.6f}\n", i, genes[i][0], genes[i][1], genes[i][2]);
    return out;
}

Genotype from_text(std::string_view text) {
    Genotype g;
    std::array<bool, 3> seen{};
    std::map<std::size_t, WeightGene> weights;
    bool axiom = false;

    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos)
            throw ParseError(fmt::format("line {}: missing ':'", line_no));
        std::istringstream head{line.substr(0, colon)};
        std::istringstream rest{line.substr(colon + 1)};
        std::string keyword, key;
        head >> keyword >> key;

        if (keyword == "axiom") {
            std::string sym;
            rest >> sym;
            if (sym != to_string(RobotSymbol::Core))
                throw ParseError(fmt::format("line {}: axiom must be C", line_no));
            axiom = true;
        } else if (keyword == "rule") {
            const auto sym = parse_symbol(key);
            if (!sym || !is_module(*sym))
                throw ParseError(fmt::format("line {}: '{}' is not a replaceable symbol", line_no, key));
            const auto slot = Genotype::rule_slot(*sym);
            if (seen[slot])
                throw ParseError(fmt::format("line {}: duplicate rule for {}", line_no, key));
            seen[slot] = true;
            std::string token;
            while (rest >> token) {
                const auto body_sym = parse_symbol(token);
                if (!body_sym)
                    throw ParseError(fmt::format("line {}: unknown symbol '{}'", line_no, token));
                g.rules[slot].push_back({*body_sym, {}});
            }
        } else if (keyword == "weights") {
            std::size_t index = 0;
            try {
                index = std::stoul(key);
            } catch (const std::exception&) {
                throw ParseError(fmt::format("line {}: bad occurrence index '{}'", line_no, key));
            }
            WeightGene w{};
            if (!(rest >> w[0] >> w[1] >> w[2]))
                throw ParseError(fmt::format("line {}: expected three weights", line_no));
            weights[index] = w;
        } else {
            throw ParseError(fmt::format("line {}: unknown keyword '{}'", line_no, keyword));
        }
    }
    if (!axiom)
        throw ParseError("missing axiom line");
    for (std::size_t slot = 0; slot < seen.size(); ++slot)
        if (!seen[slot])
            throw ParseError(fmt::format("missing rule for {}", to_string(Genotype::slot_symbol(slot))));

    std::size_t occurrence = 0;
    for (auto& body : g.rules)
        for (auto& gene : body) {
            if (!is_module(gene.symbol))
                continue;
            auto it = weights.find(occurrence);
            if (it == weights.end())
                throw ParseError(fmt::format("missing weights for occurrence {}", occurrence));
            gene.weights = it->second;
            ++occurrence;
        }
    if (weights.size() != occurrence)
        throw ParseError("weights given for non-existent occurrences");
    try {
        g.validate();
    } catch (const InvalidGenotype& e) {
        throw ParseError(e.what());
    }
    return g;
}

} // namespace bodybrain::lsystem
