#pragma once

#include "stochlang/alphabet.hpp"
#include "stochlang/cra.hpp"
#include "stochlang/distribution.hpp"
#include "stochlang/errors.hpp"
#include "stochlang/geometric.hpp"
#include "stochlang/matrix.hpp"
#include "stochlang/random.hpp"
#include "stochlang/sre.hpp"
#include "stochlang/testing.hpp"
#include "stochlang/text.hpp"
