#pragma once

#include "charflux/hammersley.hpp"
#include "charflux/kernel.hpp"
#include "charflux/limits.hpp"
#include "charflux/profiles.hpp"
#include "charflux/rng.hpp"
#include "charflux/stats.hpp"
#include "charflux/walks.hpp"
