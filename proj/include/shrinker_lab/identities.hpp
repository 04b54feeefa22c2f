#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gaussquad.hpp"

namespace shrinker_lab {

// Bracket integrands that vanish on a balanced shrinker, with the
// polynomial degree of each along a ray.
struct Identity {
    std::string label;
    PointFunction f;
    int degree;
};

inline std::vector<Identity> bracket_identities() {
    return {
        {"|x|^2-2", [](const CurveSample &p) { return norm2(p.x) - 2; }, 2},
        {"x1", [](const CurveSample &p) { return p.x.x; }, 1},
        {"x2", [](const CurveSample &p) { return p.x.y; }, 1},
        {"x1|x|^2", [](const CurveSample &p) { return p.x.x * norm2(p.x); }, 3},
        {"x2|x|^2", [](const CurveSample &p) { return p.x.y * norm2(p.x); }, 3},
        {"|x|^4-12+16k^2", [](const CurveSample &p) { return norm2(p.x) * norm2(p.x) - 12 + 16 * p.k * p.k; }, 4},
        {"<x,e1>^2-2<e1,T>^2", [](const CurveSample &p) { return p.x.x * p.x.x - 2 * p.T.x * p.T.x; }, 2},
        {"<x,e2>^2-2<e2,T>^2", [](const CurveSample &p) { return p.x.y * p.x.y - 2 * p.T.y * p.T.y; }, 2},
    };
}

struct IdentityValue {
    std::string label;
    double value;
};

inline std::vector<IdentityValue> identity_values(const ShrinkerNetwork &net) {
    std::vector<IdentityValue> out;
    for (const auto &id : bracket_identities()) out.push_back({id.label, bracket(net, id.f, id.degree)});
    return out;
}

inline double worst_identity(const ShrinkerNetwork &net) {
    double w = 0;
    for (const auto &v : identity_values(net)) w = std::max(w, std::abs(v.value));
    return w;
}

} // namespace shrinker_lab
