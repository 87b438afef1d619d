#pragma once

#include "palm/error.hpp"
#include "palm/experiment.hpp"
#include "palm/imageio.hpp"
#include "palm/linops.hpp"
#include "palm/metrics.hpp"
#include "palm/noise.hpp"
#include "palm/rng.hpp"
#include "palm/sensing.hpp"
#include "palm/shrinkage.hpp"
#include "palm/solver.hpp"
