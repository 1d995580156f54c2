#pragma once

// Umbrella header.

#include "prexpect/ast.hpp"
#include "prexpect/corpus.hpp"
#include "prexpect/expectation.hpp"
#include "prexpect/expectation_expr.hpp"
#include "prexpect/operational.hpp"
#include "prexpect/parser.hpp"
#include "prexpect/rational.hpp"
#include "prexpect/rules.hpp"
#include "prexpect/state.hpp"
#include "prexpect/syntax.hpp"
#include "prexpect/transformers.hpp"
