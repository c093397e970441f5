#pragma once

#include "specprop/common.hpp"
#include "specprop/config.hpp"
#include "specprop/cz.hpp"
#include "specprop/experiments.hpp"
#include "specprop/fft.hpp"
#include "specprop/grid.hpp"
#include "specprop/kernel.hpp"
#include "specprop/lp.hpp"
#include "specprop/solver.hpp"
#include "specprop/symbol.hpp"
