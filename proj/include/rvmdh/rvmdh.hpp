#pragma once

#include "rvmdh/config.hpp"
#include "rvmdh/error.hpp"
#include "rvmdh/market_data.hpp"
#include "rvmdh/noise_fit.hpp"
#include "rvmdh/pipeline.hpp"
#include "rvmdh/realized_vol.hpp"
#include "rvmdh/report.hpp"
#include "rvmdh/sampling.hpp"
#include "rvmdh/simulator.hpp"
#include "rvmdh/stats.hpp"

namespace rvmdh {
inline constexpr const char* kVersion = "0.1.0";
}
