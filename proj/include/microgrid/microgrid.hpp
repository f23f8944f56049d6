#pragma once

#include "microgrid/admittance.hpp"
#include "microgrid/analysis.hpp"
#include "microgrid/charpoly.hpp"
#include "microgrid/errors.hpp"
#include "microgrid/matching.hpp"
#include "microgrid/netmodel.hpp"
#include "microgrid/random_network.hpp"
#include "microgrid/spectral.hpp"
#include "microgrid/statespace.hpp"
