#include <qdent/serialization.hpp>

#include <qdent/errors.hpp>

#include <charconv>
#include <cstdio>

namespace qdent::io {

json fock_to_json(const fock::FockState& s)
{
    json terms = json::array();
    // std::map already iterates occupations lexicographically.
    for (const auto& [occ, amp] : s.terms()) {
        json occ_j = json::array();
        for (auto n : occ) occ_j.push_back(static_cast<int>(n));
        terms.push_back({{"occ", occ_j}, {"re", amp.real()}, {"im", amp.imag()}});
    }
    return {{"nmax", s.max_photons()}, {"terms", terms}};
}

fock::FockState fock_from_json(const json& j)
{
    try {
        fock::FockState s(j.at("nmax").get<int>());
        for (const auto& t : j.at("terms")) {
            const auto occ_v = t.at("occ").get<std::vector<int>>();
            if (occ_v.size() != 4) throw ConfigError("Fock term needs four occupations");
            fock::Occupation occ{};
            for (std::size_t m = 0; m < 4; ++m) {
                if (occ_v[m] < 0 || occ_v[m] > 255) throw ConfigError("occupation out of range");
                occ[m] = static_cast<std::uint8_t>(occ_v[m]);
            }
            s.add(occ, cdouble(t.at("re").get<double>(), t.at("im").get<double>()));
        }
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed Fock state JSON: ") + e.what());
    }
}

json density_to_json(const twoqubit::TwoQubitDensity& rho)
{
    json rows = json::array();
    for (int r = 0; r < 4; ++r) {
        json row = json::array();
        for (int c = 0; c < 4; ++c) row.push_back({rho.matrix()(r, c).real(), rho.matrix()(r, c).imag()});
        rows.push_back(row);
    }
    return rows;
}

twoqubit::TwoQubitDensity density_from_json(const json& j)
{
    if (!j.is_array() || j.size() != 4) throw ConfigError("density matrix JSON must be a 4x4 array");
    Matrix4c<double> m;
    try {
        for (int r = 0; r < 4; ++r) {
            if (!j[r].is_array() || j[r].size() != 4) throw ConfigError("density matrix JSON must be a 4x4 array");
            for (int c = 0; c < 4; ++c) {
                const auto& e = j[r][c];
                if (!e.is_array() || e.size() != 2) throw ConfigError("matrix entries are [re, im] pairs");
                m(r, c) = cdouble(e[0].get<double>(), e[1].get<double>());
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed density matrix JSON: ") + e.what());
    }
    return twoqubit::TwoQubitDensity(m);
}

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const json& resolved)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(resolved.dump())));
    return buf;
}

std::string format_double(double x)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

} // namespace qdent::io
