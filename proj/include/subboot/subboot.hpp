#pragma once

#include "subboot/dataset.hpp"
#include "subboot/engines.hpp"
#include "subboot/errors.hpp"
#include "subboot/estimators.hpp"
#include "subboot/mc_oracle.hpp"
#include "subboot/moments.hpp"
#include "subboot/msemodel.hpp"
#include "subboot/parallel.hpp"
#include "subboot/sampling.hpp"
#include "subboot/tuner.hpp"
#include "subboot/types.hpp"
