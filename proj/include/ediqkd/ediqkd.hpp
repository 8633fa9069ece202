#pragma once

#include "quantum_core.hpp"
#include "tomography.hpp"
#include "classical_bound.hpp"
#include "adversary.hpp"
#include "keyrate.hpp"
#include "photonic.hpp"
#include "protocol_sim.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "fgc_cache.hpp"
#include "reports.hpp"
