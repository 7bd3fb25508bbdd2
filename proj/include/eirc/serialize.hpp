#pragma once

#include <optional>
#include <string>

#include "eirc/readout.hpp"
#include "eirc/reservoir.hpp"

namespace eirc {

// Versioned binary dump of a reservoir (config, neuron types, weights, link
// structure, state), optionally with a trained readout in the same container.
// Round-trips are bit-exact. Native byte order.
void save_reservoir(const std::string& path, const EIReservoir& res,
                    const Readout* readout = nullptr);

struct ReservoirDump {
    EIReservoir reservoir;
    std::optional<Readout> readout;
};

ReservoirDump load_reservoir(const std::string& path);

} // namespace eirc
