#pragma once

#include "parfid/generators.hpp"
