#pragma once

#include "strata/automaton.hpp"
#include "strata/checker.hpp"
#include "strata/csl.hpp"
#include "strata/ctmc.hpp"
#include "strata/error.hpp"
#include "strata/io.hpp"
#include "strata/parser.hpp"
#include "strata/poisson.hpp"
#include "strata/product.hpp"
#include "strata/simulate.hpp"
#include "strata/transient.hpp"
#include "strata/until.hpp"
