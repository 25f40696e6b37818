#pragma once

#include "qmcsim/assembly.hpp"
#include "qmcsim/chiplet.hpp"
#include "qmcsim/config.hpp"
#include "qmcsim/csv.hpp"
#include "qmcsim/emitters.hpp"
#include "qmcsim/implant.hpp"
#include "qmcsim/lm.hpp"
#include "qmcsim/oracles.hpp"
#include "qmcsim/pipeline.hpp"
#include "qmcsim/repro.hpp"
#include "qmcsim/rng.hpp"
#include "qmcsim/species.hpp"
#include "qmcsim/spectra.hpp"
#include "qmcsim/tuning.hpp"
#include "qmcsim/units.hpp"
