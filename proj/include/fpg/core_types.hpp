#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fpg/consumption_path.hpp"

namespace fpg {

// Type vector of one agent: initial wealth, risk tolerance, competition
// weight, wealth/consumption weight and the coefficients of its own stock
// dS/S = mu dt + nu dW + sigma dB.
struct AgentType {
    double x0 = 1.0;
    double delta = 2.0;
    double theta = 0.0;
    double epsilon = 1.0;
    double mu = 0.1;
    double nu = 0.0;
    double sigma = 0.2;

    double total_variance() const { return nu * nu + sigma * sigma; }
    // Exponent of the power fields, 1 - 1/delta.
    double power() const { return 1.0 - 1.0 / delta; }
    // theta (1 - delta); shows up everywhere the population enters.
    double coupling() const { return theta * (1.0 - delta); }

    bool operator==(const AgentType&) const = default;
};

// Throws DomainError naming the first violated field.
void validate_agent(const AgentType& a);

struct MarketConfig {
    double kappa = 0.0;
};

struct DiscreteLaw {
    std::vector<AgentType> types;
    std::vector<double> weights;
};

// Independent per-field draws: fixed value when lo == hi, otherwise uniform.
struct BoxSampler {
    static constexpr std::size_t n_fields = 7;
    // Order matches AgentType: x0, delta, theta, epsilon, mu, nu, sigma.
    std::array<std::pair<double, double>, n_fields> ranges{};

    static BoxSampler point(const AgentType& a);
    AgentType draw(std::mt19937_64& rng) const;
};

class TypeDistribution {
public:
    // Weights within 1e-9 of summing to one are renormalised; others rejected.
    static TypeDistribution discrete(std::vector<AgentType> types, std::vector<double> weights);
    static TypeDistribution point_mass(const AgentType& a);
    static TypeDistribution sampler(BoxSampler box);

    bool is_discrete() const { return std::holds_alternative<DiscreteLaw>(law_); }
    const DiscreteLaw& discrete_law() const { return std::get<DiscreteLaw>(law_); }
    const BoxSampler& box() const { return std::get<BoxSampler>(law_); }

    AgentType draw(std::mt19937_64& rng) const;

private:
    std::variant<DiscreteLaw, BoxSampler> law_;
};

// Draw i uses its own stream derived from (seed, i), so the first m draws of
// sample_types(d, n, s) equal sample_types(d, m, s) for m <= n.
std::vector<AgentType> sample_types(const TypeDistribution& d, std::size_t n, std::uint64_t seed);

struct EquilibriumStrategy {
    double pi = 0.0;
    ConsumptionPath consumption;
};

std::string to_json_string(const TypeDistribution& d);
TypeDistribution type_distribution_from_json_string(const std::string& s);

}  // namespace fpg
