/**
 * @file errprop.hpp
 * @brief Umbrella header for the errprop library.
 */
#pragma once

#include <errprop/adjustment.hpp>
#include <errprop/distributions.hpp>
#include <errprop/error_model.hpp>
#include <errprop/errors.hpp>
#include <errprop/linalg.hpp>
#include <errprop/montecarlo.hpp>
#include <errprop/propagation.hpp>
#include <errprop/random.hpp>
