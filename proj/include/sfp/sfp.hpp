// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

#pragma once

#include "sfp/error.hpp"
#include "sfp/evaluate.hpp"
#include "sfp/fresnel.hpp"
#include "sfp/image.hpp"
#include "sfp/metrics.hpp"
#include "sfp/parallel.hpp"
#include "sfp/pol_core.hpp"
#include "sfp/priors.hpp"
#include "sfp/refractive.hpp"
#include "sfp/separation.hpp"
#include "sfp/shape_opt.hpp"
#include "sfp/synth.hpp"
