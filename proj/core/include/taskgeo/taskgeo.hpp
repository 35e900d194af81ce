#pragma once

#include "taskgeo/anneal.hpp"
#include "taskgeo/error.hpp"
#include "taskgeo/friction.hpp"
#include "taskgeo/grid.hpp"
#include "taskgeo/io.hpp"
#include "taskgeo/manifold.hpp"
#include "taskgeo/maxent.hpp"
#include "taskgeo/mdp.hpp"
#include "taskgeo/protocol.hpp"
