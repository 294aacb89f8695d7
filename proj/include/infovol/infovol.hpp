#pragma once

#include "infovol/core/error.hpp"
#include "infovol/core/rng.hpp"
#include "infovol/core/time_series.hpp"
#include "infovol/evalstats.hpp"
#include "infovol/garch.hpp"
#include "infovol/infoflow.hpp"
#include "infovol/io.hpp"
#include "infovol/marketdata.hpp"
#include "infovol/mdhsim.hpp"
#include "infovol/version.hpp"
