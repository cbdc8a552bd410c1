#ifndef AREL_AREL_HPP
#define AREL_AREL_HPP

#include "arel/cel.hpp"
#include "arel/cml.hpp"
#include "arel/dataset.hpp"
#include "arel/diagnostics.hpp"
#include "arel/el.hpp"
#include "arel/model.hpp"
#include "arel/sim.hpp"

#endif  // AREL_AREL_HPP
