#pragma once

#include "hmcd/align.hpp"
#include "hmcd/commands.hpp"
#include "hmcd/dataset.hpp"
#include "hmcd/dataset_io.hpp"
#include "hmcd/factorize.hpp"
#include "hmcd/matrix_io.hpp"
#include "hmcd/metrics.hpp"
#include "hmcd/report_io.hpp"
#include "hmcd/rng.hpp"
#include "hmcd/synth.hpp"
#include "hmcd/types.hpp"
