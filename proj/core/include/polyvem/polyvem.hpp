#pragma once

#include "polyvem/assembly.hpp"
#include "polyvem/errors.hpp"
#include "polyvem/mesh.hpp"
#include "polyvem/physics.hpp"
#include "polyvem/polybasis.hpp"
#include "polyvem/vem_local.hpp"
#include "polyvem/verify.hpp"
