#pragma once

#include "qkl/errors.hpp"
#include "qkl/types.hpp"
#include "qkl/numlin.hpp"
#include "qkl/quadrature.hpp"
#include "qkl/sinbasis.hpp"
#include "qkl/oqho.hpp"
#include "qkl/response.hpp"
#include "qkl/kernel_eig.hpp"
#include "qkl/qef.hpp"
#include "qkl/fock_oracle.hpp"
