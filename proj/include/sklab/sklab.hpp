#pragma once

#include "sklab/bits.hpp"
#include "sklab/errors.hpp"
#include "sklab/experiment.hpp"
#include "sklab/information.hpp"
#include "sklab/key_extraction.hpp"
#include "sklab/linear_code.hpp"
#include "sklab/oracle.hpp"
#include "sklab/parallel.hpp"
#include "sklab/protocol.hpp"
#include "sklab/rng.hpp"
#include "sklab/source_models.hpp"
