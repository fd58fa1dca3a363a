#pragma once

#include "ensmark/analysis.hpp"
#include "ensmark/core.hpp"
#include "ensmark/detect.hpp"
#include "ensmark/generate.hpp"
#include "ensmark/harness.hpp"
#include "ensmark/keys.hpp"
#include "ensmark/lm.hpp"
#include "ensmark/parallel.hpp"
#include "ensmark/prf.hpp"
#include "ensmark/reweight.hpp"
#include "ensmark/stats.hpp"
