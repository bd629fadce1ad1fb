#pragma once

#include "polaron_tfim/analysis.hpp"
#include "polaron_tfim/config.hpp"
#include "polaron_tfim/ed_oracle.hpp"
#include "polaron_tfim/errors.hpp"
#include "polaron_tfim/golden_section.hpp"
#include "polaron_tfim/lattice.hpp"
#include "polaron_tfim/model.hpp"
#include "polaron_tfim/parallel.hpp"
#include "polaron_tfim/qmc_engine.hpp"
#include "polaron_tfim/rng.hpp"
#include "polaron_tfim/runner.hpp"
#include "polaron_tfim/swtheory.hpp"
