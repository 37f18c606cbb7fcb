#pragma once

#include "proxthresh/ext_real.hpp"
#include "proxthresh/region.hpp"
#include "proxthresh/attributes.hpp"
#include "proxthresh/expr.hpp"
#include "proxthresh/parser.hpp"
#include "proxthresh/serialize.hpp"
#include "proxthresh/threshold.hpp"
#include "proxthresh/numerics.hpp"
#include "proxthresh/checks.hpp"
