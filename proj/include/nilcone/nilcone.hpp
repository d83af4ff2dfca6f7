#pragma once

#include "nilcone/rational.hpp"
#include "nilcone/linalg.hpp"
#include "nilcone/algebra.hpp"
#include "nilcone/bch.hpp"
#include "nilcone/geometry.hpp"
#include "nilcone/lattice.hpp"
#include "nilcone/catalog.hpp"
#include "nilcone/random.hpp"
#include "nilcone/stats.hpp"
#include "nilcone/word_metric.hpp"
#include "nilcone/factorization.hpp"
#include "nilcone/coupling.hpp"
#include "nilcone/derivative.hpp"
#include "nilcone/report.hpp"
#include "nilcone/serialization.hpp"
