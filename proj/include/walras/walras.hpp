#pragma once

#include "walras/common.hpp"
#include "walras/economy.hpp"
#include "walras/io.hpp"
#include "walras/negishi.hpp"
#include "walras/oracle.hpp"
#include "walras/potential.hpp"
