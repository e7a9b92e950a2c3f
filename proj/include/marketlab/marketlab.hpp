#pragma once

#include "marketlab/clearing.hpp"
#include "marketlab/equilibria.hpp"
#include "marketlab/io.hpp"
#include "marketlab/market.hpp"
#include "marketlab/settlement.hpp"
#include "marketlab/sweeps.hpp"
#include "marketlab/verifier.hpp"
