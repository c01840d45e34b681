#pragma once

#include "nsbandit/rng.hpp"
#include "nsbandit/gaussian.hpp"
#include "nsbandit/latent.hpp"
#include "nsbandit/csv.hpp"
#include "nsbandit/environment.hpp"
#include "nsbandit/posterior.hpp"
#include "nsbandit/satisficing.hpp"
#include "nsbandit/policies.hpp"
#include "nsbandit/info_metrics.hpp"
#include "nsbandit/config.hpp"
#include "nsbandit/harness.hpp"
