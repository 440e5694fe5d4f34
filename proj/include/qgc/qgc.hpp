#pragma once

#include "qgc/error.hpp"
#include "qgc/numerics.hpp"
#include "qgc/model.hpp"
#include "qgc/hamiltonian.hpp"
#include "qgc/cavity.hpp"
#include "qgc/synthesis.hpp"
#include "qgc/verify.hpp"
#include "qgc/io.hpp"
#include "qgc/cli.hpp"
