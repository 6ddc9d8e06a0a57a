#pragma once

#include "parfid/generators.hpp"
#include "parfid/pairs.hpp"
