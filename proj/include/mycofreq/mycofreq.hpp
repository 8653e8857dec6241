#pragma once

// Convenience header pulling in the whole library.

#include "errors.hpp"
#include "fuzzy.hpp"
#include "mixing.hpp"
#include "netsim.hpp"
#include "signal.hpp"
#include "spectral.hpp"

#include "pipeline/config.hpp"
#include "pipeline/ingest.hpp"
#include "pipeline/report.hpp"
#include "pipeline/sweep.hpp"
