#pragma once

#include "lsd/closedform.hpp"
#include "lsd/config.hpp"
#include "lsd/error.hpp"
#include "lsd/experiments.hpp"
#include "lsd/inversion.hpp"
#include "lsd/models.hpp"
#include "lsd/runner.hpp"
#include "lsd/schemes.hpp"
#include "lsd/wiener.hpp"
