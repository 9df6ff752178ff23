// Umbrella header.
#pragma once

#include "bfmix/runner.hpp"
