#pragma once

#include "tstab/assessment.hpp"
#include "tstab/cct.hpp"
#include "tstab/coi.hpp"
#include "tstab/equal_area.hpp"
#include "tstab/errors.hpp"
#include "tstab/network.hpp"
#include "tstab/reduction.hpp"
#include "tstab/reports.hpp"
#include "tstab/simulation.hpp"
#include "tstab/version.hpp"
