#pragma once

#include "cardopt/errors.hpp"
#include "cardopt/linalg.hpp"
#include "cardopt/nlp.hpp"
#include "cardopt/oracle.hpp"
#include "cardopt/problem.hpp"
#include "cardopt/problems.hpp"
#include "cardopt/reformulation.hpp"
#include "cardopt/scholtes.hpp"
#include "cardopt/secondorder.hpp"
#include "cardopt/serialize.hpp"
#include "cardopt/stationarity.hpp"
