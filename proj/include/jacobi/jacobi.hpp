#pragma once

#include <jacobi/accessory.hpp>
#include <jacobi/catenary.hpp>
#include <jacobi/conjugate.hpp>
#include <jacobi/expression.hpp>
#include <jacobi/oracle.hpp>
#include <jacobi/problem.hpp>
#include <jacobi/problem_file.hpp>
