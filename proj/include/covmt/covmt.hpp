#pragma once

// Covariance-enhanced multi-tissue eQTL weight estimation: penalized ECM
// solver, comparison estimators, simulation generators, evaluation metrics
// and archive/TSV persistence.

#include "covmt/archive.hpp"
#include "covmt/baselines.hpp"
#include "covmt/beta_prox.hpp"
#include "covmt/config.hpp"
#include "covmt/dataset_io.hpp"
#include "covmt/ecm.hpp"
#include "covmt/estep.hpp"
#include "covmt/glasso.hpp"
#include "covmt/metrics.hpp"
#include "covmt/objective.hpp"
#include "covmt/parallel.hpp"
#include "covmt/rng.hpp"
#include "covmt/simgen.hpp"
#include "covmt/standardize.hpp"
#include "covmt/tsv.hpp"
#include "covmt/tuning.hpp"
#include "covmt/types.hpp"
#include "covmt/version.hpp"
