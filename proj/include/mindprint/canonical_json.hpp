#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "mindprint/errors.hpp"

namespace mindprint {

// Canonical JSON serialization: object keys sorted (nlohmann's default map
// ordering), floating-point numbers fixed to 6 decimals, compact separators.
// Emitting, re-parsing and emitting again is byte-identical, which makes
// passports and ledgers diff-able and hashable.
inline void canonical_dump_to(const nlohmann::json& j, std::string& out) {
    using value_t = nlohmann::json::value_t;
    switch (j.type()) {
        case value_t::object: {
            out.push_back('{');
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out.push_back(',');
                first = false;
                out += nlohmann::json(it.key()).dump();
                out.push_back(':');
                canonical_dump_to(it.value(), out);
            }
            out.push_back('}');
            break;
        }
        case value_t::array: {
            out.push_back('[');
            bool first = true;
            for (const auto& el : j) {
                if (!first) out.push_back(',');
                first = false;
                canonical_dump_to(el, out);
            }
            out.push_back(']');
            break;
        }
        case value_t::number_float: {
            double v = j.get<double>();
            if (!std::isfinite(v)) {
                throw ValidationError("canonical JSON forbids non-finite numbers");
            }
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.6f", v);
            out += buf;
            break;
        }
        default:
            out += j.dump();
            break;
    }
}

inline std::string canonical_dump(const nlohmann::json& j) {
    std::string out;
    canonical_dump_to(j, out);
    return out;
}

} // namespace mindprint
