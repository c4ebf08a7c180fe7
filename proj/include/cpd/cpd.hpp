#pragma once

#include "cpd/error.hpp"
#include "cpd/format.hpp"
#include "cpd/timeseries.hpp"
#include "cpd/linalg.hpp"
#include "cpd/longrun.hpp"
#include "cpd/rng.hpp"
#include "cpd/critvals.hpp"
#include "cpd/offline.hpp"
#include "cpd/online.hpp"
#include "cpd/trend.hpp"
#include "cpd/monitor.hpp"
#include "cpd/netsim.hpp"
