#pragma once

#include "fkpp/config.hpp"
#include "fkpp/error.hpp"
#include "fkpp/experiments.hpp"
#include "fkpp/inverse.hpp"
#include "fkpp/io.hpp"
#include "fkpp/param_space.hpp"
#include "fkpp/pde_core.hpp"
#include "fkpp/tridiagonal.hpp"
#include "fkpp/verify.hpp"
