#pragma once

#include <qdent/fock.hpp>
#include <qdent/twoqubit.hpp>

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace qdent::io {

using json = nlohmann::ordered_json;

/// {"nmax": n, "terms": [{"occ": [..], "re": x, "im": y}, ...]}, terms in
/// lexicographic order of occ.
json fock_to_json(const fock::FockState& s);
fock::FockState fock_from_json(const json& j);

/// 4x4 array of [re, im], basis order HH, HV, VH, VV.
json density_to_json(const twoqubit::TwoQubitDensity& rho);
twoqubit::TwoQubitDensity density_from_json(const json& j);

std::uint64_t fnv1a64(std::string_view bytes);

/// FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const json& resolved);

/// Shortest round-trip decimal form, locale independent.
std::string format_double(double x);

} // namespace qdent::io
