#pragma once

// Circuit description language: parse, validate, run, pretty-print.

#include "heraldlab/dsl/ast.hpp"
#include "heraldlab/dsl/compiler.hpp"
#include "heraldlab/dsl/parser.hpp"
#include "heraldlab/dsl/runner.hpp"
