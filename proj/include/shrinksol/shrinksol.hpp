#pragma once

#include "analyze.hpp"
#include "equilibria.hpp"
#include "integrate.hpp"
#include "phase.hpp"
#include "precision.hpp"
#include "reconstruct.hpp"
