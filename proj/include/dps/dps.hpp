#pragma once

#include "dps/cache.hpp"
#include "dps/cli.hpp"
#include "dps/config.hpp"
#include "dps/eigen.hpp"
#include "dps/energy.hpp"
#include "dps/errors.hpp"
#include "dps/grid.hpp"
#include "dps/io.hpp"
#include "dps/nehari.hpp"
#include "dps/orlicz.hpp"
#include "dps/spectrum.hpp"
