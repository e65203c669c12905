#pragma once

#include "hycon/adapter.hpp"
#include "hycon/cones.hpp"
#include "hycon/digest.hpp"
#include "hycon/embedding_set.hpp"
#include "hycon/errors.hpp"
#include "hycon/frechet.hpp"
#include "hycon/harness.hpp"
#include "hycon/io.hpp"
#include "hycon/lorentz.hpp"
#include "hycon/parallel.hpp"
#include "hycon/steering.hpp"
