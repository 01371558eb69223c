#pragma once

#include "pcmssc/core.hpp"
#include "pcmssc/preprocess.hpp"
#include "pcmssc/geometry.hpp"
#include "pcmssc/bounds.hpp"
#include "pcmssc/heuristics.hpp"
#include "pcmssc/oracle.hpp"
#include "pcmssc/engine.hpp"
#include "pcmssc/io.hpp"
