#pragma once

#include "ssb/lattice.hpp"
#include "ssb/potentials.hpp"
#include "ssb/hamiltonian.hpp"
#include "ssb/eigensolve.hpp"
#include "ssb/eigensolve/sectors.hpp"
#include "ssb/semiclassics.hpp"
#include "ssb/spin.hpp"
#include "ssb/experiments/config.hpp"
#include "ssb/experiments/output.hpp"
#include "ssb/experiments/runner.hpp"
