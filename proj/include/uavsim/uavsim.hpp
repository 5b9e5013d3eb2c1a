#pragma once

#include "uavsim/association.hpp"
#include "uavsim/benchmarks.hpp"
#include "uavsim/config.hpp"
#include "uavsim/energy.hpp"
#include "uavsim/error.hpp"
#include "uavsim/experiment.hpp"
#include "uavsim/metaheuristics.hpp"
#include "uavsim/orchestrator.hpp"
#include "uavsim/phase/cvae.hpp"
#include "uavsim/phase/dataset.hpp"
#include "uavsim/phase/hgpso.hpp"
#include "uavsim/phase/lbl_ipso.hpp"
#include "uavsim/phase/link.hpp"
#include "uavsim/phase/mlp.hpp"
#include "uavsim/placement.hpp"
#include "uavsim/random.hpp"
#include "uavsim/scenario.hpp"
#include "uavsim/sim_channel.hpp"
#include "uavsim/sim_geometry.hpp"
