#pragma once

#include "na1lab/errors.hpp"
#include "na1lab/lp.hpp"
#include "na1lab/quadrature.hpp"
#include "na1lab/market.hpp"
#include "na1lab/arbitrage.hpp"
#include "na1lab/portfolio.hpp"
#include "na1lab/factor.hpp"
#include "na1lab/hedging.hpp"
#include "na1lab/tree.hpp"
