#pragma once

#include "qsync/detection.hpp"
#include "qsync/dip_fit.hpp"
#include "qsync/errors.hpp"
#include "qsync/fourfold.hpp"
#include "qsync/hom.hpp"
#include "qsync/optics.hpp"
#include "qsync/output.hpp"
#include "qsync/photon.hpp"
#include "qsync/presets.hpp"
#include "qsync/relay_routing.hpp"
#include "qsync/rng.hpp"
#include "qsync/scenario.hpp"
#include "qsync/simulation.hpp"
#include "qsync/spdc.hpp"
#include "qsync/stabilizer.hpp"
#include "qsync/units.hpp"
