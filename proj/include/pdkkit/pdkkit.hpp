#pragma once

#include "pdkkit/error.hpp"
#include "pdkkit/arch.hpp"
#include "pdkkit/instruction.hpp"
#include "pdkkit/opcode_map.hpp"
#include "pdkkit/map_json.hpp"
#include "pdkkit/assembler.hpp"
#include "pdkkit/simulator.hpp"
#include "pdkkit/lowering.hpp"
#include "pdkkit/atomic_flag.hpp"
#include "pdkkit/bcd.hpp"
#include "pdkkit/corpus.hpp"
