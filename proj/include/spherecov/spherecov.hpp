#pragma once

#include "spherecov/covariance.hpp"
#include "spherecov/error.hpp"
#include "spherecov/field.hpp"
#include "spherecov/io.hpp"
#include "spherecov/kernel.hpp"
#include "spherecov/nelder_mead.hpp"
#include "spherecov/oracle.hpp"
#include "spherecov/sphere_geom.hpp"
