#pragma once

#include "windbid/backtest.hpp"
#include "windbid/dataset.hpp"
#include "windbid/errors.hpp"
#include "windbid/io.hpp"
#include "windbid/market_model.hpp"
#include "windbid/merit_order.hpp"
#include "windbid/report.hpp"
#include "windbid/settlement.hpp"
#include "windbid/strategy.hpp"
#include "windbid/synthetic.hpp"
