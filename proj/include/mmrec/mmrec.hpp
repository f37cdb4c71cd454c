#pragma once

#include "mmrec/config.hpp"
#include "mmrec/dataset.hpp"
#include "mmrec/error.hpp"
#include "mmrec/evaluation.hpp"
#include "mmrec/experiment.hpp"
#include "mmrec/features.hpp"
#include "mmrec/interactions.hpp"
#include "mmrec/matrix_io.hpp"
#include "mmrec/model.hpp"
#include "mmrec/rng.hpp"
#include "mmrec/trainer.hpp"
#include "mmrec/types.hpp"
