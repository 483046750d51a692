#pragma once

#include "ledgersim/config/genesis.hpp"
#include "ledgersim/sim/simulation.hpp"

#include <vector>

namespace fixtures {

using namespace ledgersim;

inline crypto::KeyPair key(std::uint8_t fill) {
    return crypto::KeyPair::from_seed(config::fill_seed(fill));
}

inline std::vector<crypto::KeyPair> validators(std::size_t n) {
    std::vector<crypto::KeyPair> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(key(static_cast<std::uint8_t>(i + 1)));
    return out;
}

inline std::vector<crypto::KeyPair> clients(std::size_t n) {
    std::vector<crypto::KeyPair> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(key(static_cast<std::uint8_t>(0xa0 + i)));
    return out;
}

inline sim::SimulationSetup setup(std::size_t n, std::uint64_t seed, std::uint64_t gst = 100) {
    sim::SimulationSetup s;
    s.validators = validators(n);
    s.clients = clients(3);
    s.network = net::NetworkParams{gst, 5, 50, 0.1, seed};
    return s;
}

inline std::shared_ptr<crypto::KeyedHashScheme> scheme_with(const std::vector<crypto::KeyPair>& keys) {
    auto s = std::make_shared<crypto::KeyedHashScheme>();
    for (const auto& k : keys) s->register_key(k);
    return s;
}

} // namespace fixtures
