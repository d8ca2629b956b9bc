#include "fpg/core_types.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fpg/errors.hpp"
#include "fpg/rng.hpp"

namespace fpg {

void validate_agent(const AgentType& a) {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(a.x0) || !(a.x0 > 0.0)) throw DomainError("x0 must be positive");
    if (!finite(a.delta) || !(a.delta > 0.0)) throw DomainError("delta must be positive");
    if (a.delta == 1.0) throw DomainError("delta=1 excluded");
    if (!finite(a.theta) || a.theta < 0.0 || a.theta > 1.0) throw DomainError("theta must lie in [0,1]");
    if (!finite(a.epsilon) || !(a.epsilon > 0.0)) throw DomainError("epsilon must be positive");
    if (!finite(a.mu) || !(a.mu > 0.0)) throw DomainError("mu must be positive");
    if (!finite(a.nu) || a.nu < 0.0) throw DomainError("nu must be nonnegative");
    if (!finite(a.sigma) || a.sigma < 0.0) throw DomainError("sigma must be nonnegative");
    if (!(a.sigma + a.nu > 0.0)) throw DomainError("sigma+nu must be positive");
}

BoxSampler BoxSampler::point(const AgentType& a) {
    BoxSampler b;
    const double v[n_fields] = {a.x0, a.delta, a.theta, a.epsilon, a.mu, a.nu, a.sigma};
    for (std::size_t k = 0; k < n_fields; ++k) b.ranges[k] = {v[k], v[k]};
    return b;
}

AgentType BoxSampler::draw(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double v[n_fields];
    for (std::size_t k = 0; k < n_fields; ++k) {
        const auto [lo, hi] = ranges[k];
        // Always consume a variate so fixed fields do not shift the stream.
        const double w = u(rng);
        v[k] = lo == hi ? lo : lo + (hi - lo) * w;
    }
    return AgentType{v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
}

TypeDistribution TypeDistribution::discrete(std::vector<AgentType> types, std::vector<double> weights) {
    if (types.empty()) throw DomainError("discrete law needs at least one type");
    if (types.size() != weights.size()) throw DomainError("types and weights differ in length");
    for (const auto& t : types) validate_agent(t);
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw DomainError("weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DomainError("weights must sum to 1");
    if (total != 1.0)
        for (double& w : weights) w /= total;
    TypeDistribution d;
    d.law_ = DiscreteLaw{std::move(types), std::move(weights)};
    return d;
}

TypeDistribution TypeDistribution::point_mass(const AgentType& a) { return discrete({a}, {1.0}); }

TypeDistribution TypeDistribution::sampler(BoxSampler box) {
    for (const auto& [lo, hi] : box.ranges)
        if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo) throw DomainError("sampler range must satisfy lo <= hi");
    // Corners are the extreme values; every draw is admissible iff all corners are,
    // except for the sigma+nu constraint, which needs the lower corner only.
    AgentType lo_corner{box.ranges[0].first, box.ranges[1].first, box.ranges[2].first, box.ranges[3].first,
                        box.ranges[4].first, box.ranges[5].first, box.ranges[6].first};
    AgentType hi_corner{box.ranges[0].second, box.ranges[1].second, box.ranges[2].second, box.ranges[3].second,
                        box.ranges[4].second, box.ranges[5].second, box.ranges[6].second};
    if (box.ranges[1].first <= 1.0 && box.ranges[1].second >= 1.0) throw DomainError("delta=1 excluded");
    validate_agent(lo_corner);
    validate_agent(hi_corner);
    TypeDistribution d;
    d.law_ = box;
    return d;
}

AgentType TypeDistribution::draw(std::mt19937_64& rng) const {
    if (is_discrete()) {
        const auto& law = discrete_law();
        std::discrete_distribution<std::size_t> pick(law.weights.begin(), law.weights.end());
        return law.types[pick(rng)];
    }
    return box().draw(rng);
}

std::vector<AgentType> sample_types(const TypeDistribution& d, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw DomainError("sample size must be at least 1");
    std::vector<AgentType> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto rng = make_stream(seed, i, 0x7479706573ULL);
        out.push_back(d.draw(rng));
    }
    return out;
}

namespace {

using nlohmann::json;

json agent_json(const AgentType& a) {
    return json{{"x0", a.x0},           {"delta", a.delta}, {"theta", a.theta}, {"epsilon", a.epsilon},
                {"mu", a.mu},           {"nu", a.nu},       {"sigma", a.sigma}};
}

AgentType agent_from(const json& j) {
    AgentType a;
    a.x0 = j.value("x0", 1.0);
    a.delta = j.at("delta").get<double>();
    a.theta = j.value("theta", 0.0);
    a.epsilon = j.value("epsilon", 1.0);
    a.mu = j.at("mu").get<double>();
    a.nu = j.value("nu", 0.0);
    a.sigma = j.value("sigma", 0.0);
    return a;
}

constexpr const char* field_names[BoxSampler::n_fields] = {"x0", "delta", "theta", "epsilon", "mu", "nu", "sigma"};

}  // namespace

std::string to_json_string(const TypeDistribution& d) {
    json j;
    if (d.is_discrete()) {
        json types = json::array();
        for (std::size_t k = 0; k < d.discrete_law().types.size(); ++k) {
            auto t = agent_json(d.discrete_law().types[k]);
            t["weight"] = d.discrete_law().weights[k];
            types.push_back(t);
        }
        j["discrete"] = types;
    } else {
        json box;
        for (std::size_t k = 0; k < BoxSampler::n_fields; ++k)
            box[field_names[k]] = {d.box().ranges[k].first, d.box().ranges[k].second};
        j["sampler"] = box;
    }
    return j.dump();
}

TypeDistribution type_distribution_from_json_string(const std::string& s) {
    const json j = json::parse(s);
    if (j.contains("discrete")) {
        std::vector<AgentType> types;
        std::vector<double> weights;
        for (const auto& t : j.at("discrete")) {
            types.push_back(agent_from(t));
            weights.push_back(t.at("weight").get<double>());
        }
        return TypeDistribution::discrete(std::move(types), std::move(weights));
    }
    const auto& box = j.at("sampler");
    BoxSampler b = BoxSampler::point(AgentType{});
    for (std::size_t k = 0; k < BoxSampler::n_fields; ++k) {
        if (!box.contains(field_names[k])) continue;
        const auto& v = box.at(field_names[k]);
        if (v.is_number())
            b.ranges[k] = {v.get<double>(), v.get<double>()};
        else
            b.ranges[k] = {v.at(0).get<double>(), v.at(1).get<double>()};
    }
    return TypeDistribution::sampler(b);
}

}  // namespace fpg
