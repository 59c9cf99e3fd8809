#pragma once

#include "pubforge/error.hpp"
#include "pubforge/table.hpp"
#include "pubforge/rng.hpp"
#include "pubforge/corpus.hpp"
#include "pubforge/dblp.hpp"
#include "pubforge/cohort.hpp"
#include "pubforge/regression.hpp"
#include "pubforge/creativity.hpp"
#include "pubforge/forecast.hpp"
#include "pubforge/evaluate.hpp"
#include "pubforge/synth.hpp"
#include "pubforge/config.hpp"
#include "pubforge/report.hpp"
