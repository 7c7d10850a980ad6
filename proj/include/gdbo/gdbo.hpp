#pragma once

#include "error.hpp"
#include "rng.hpp"
#include "normal.hpp"
#include "domain.hpp"
#include "acquisition.hpp"
#include "learning.hpp"
#include "sampling.hpp"
#include "theory.hpp"
#include "engine.hpp"
#include "diagnostics.hpp"
#include "io/format.hpp"
#include "io/records.hpp"
#include "io/config.hpp"
